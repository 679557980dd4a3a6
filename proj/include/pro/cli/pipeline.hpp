#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pro/backbone/backbone.hpp"
#include "pro/bfm/bfm.hpp"
#include "pro/cli/config.hpp"
#include "pro/data/scene.hpp"
#include "pro/fusion/network.hpp"
#include "pro/metrics/metrics.hpp"

namespace pro::cli {

// Patch-index namespaces for the oracle's per-patch jitter.
inline constexpr std::uint64_t kInferIndexBase = 1ull << 40;
inline constexpr std::uint64_t kCeIndexBase = 2ull << 40;
inline constexpr std::uint64_t kTrainIndexBase = 3ull << 40;

// Per-scene quantities reused by every patch of the scene.
struct SceneContext {
  const data::Scene* scene = nullptr;
  backbone::BackboneOutput coarse;  // from depth_true
  DepthMap gt_norm;                 // normalized depth_labeled, scene resolution
  std::optional<bfm::BfmMasks> masks;

  int height() const { return scene->depth_true.height(); }
  int width() const { return scene->depth_true.width(); }
};

SceneContext prepare_scene(const data::Scene& scene, const RunConfig& cfg, bool with_masks);

// Coarse depth lifted to scene resolution (the input of the mask test).
DepthMap coarse_at_scene_resolution(const SceneContext& ctx);

// Network inputs of the patch at `rect` (scene frame).
fusion::NetInputs<float> patch_inputs(const SceneContext& ctx, const PatchRect& rect,
                                      std::uint64_t patch_index, const RunConfig& cfg);

template <typename T>
fusion::NetInputs<T> cast_inputs(const fusion::NetInputs<float>& in);

// D_refine for one patch at patch_res.
DepthMap refine(const fusion::ResidualNet& net, const fusion::ParameterStore<float>& params,
                const fusion::NetInputs<float>& in);

struct InferResult {
  std::vector<DepthMap> coarse_rois;  // per cell, patch_res
  std::vector<DepthMap> refined;      // per cell, patch_res
  DepthMap merged;                    // scene resolution
};

// One refinement pass per grid cell, then reassembly.
InferResult infer_scene(const fusion::ResidualNet& net, const fusion::ParameterStore<float>& params,
                        const SceneContext& ctx, const tiling::GridSpec& grid, const RunConfig& cfg);

// Deterministic CE groups for scene `scene_index`: square regions of side
// 2 * patch - overlap whose positions come from the run seed.
std::vector<tiling::OverlapGroup> ce_groups(int scene_w, int scene_h, int patch, int overlap, int count,
                                            std::uint64_t seed, std::size_t scene_index);

double scene_consistency_error(const fusion::ResidualNet& net,
                               const fusion::ParameterStore<float>& params, const SceneContext& ctx,
                               const std::vector<tiling::OverlapGroup>& groups, const RunConfig& cfg);

struct TransparentReport {
  std::optional<double> transparent_absrel;  // unset when the scene has no glass
  std::optional<double> opaque_absrel;
  std::size_t transparent_pixels = 0;
};

struct SceneEval {
  metrics::MetricReport report;
  TransparentReport transparent;
};

struct MetricSelection {
  bool absrel = true, delta1 = true, d3r = true, br = true, ce = true;
  static MetricSelection parse(const std::string& list);  // comma separated names or "all"
};

SceneEval evaluate_scene(const fusion::ResidualNet& net, const fusion::ParameterStore<float>& params,
                         const data::Scene& scene, std::size_t scene_index, const RunConfig& cfg,
                         const MetricSelection& sel = {});

}  // namespace pro::cli
