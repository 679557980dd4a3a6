#include "pro/cli/pipeline.hpp"

#include <sstream>

#include "pro/core/ops.hpp"
#include "pro/core/rng.hpp"

namespace pro::cli {

SceneContext prepare_scene(const data::Scene& scene, const RunConfig& cfg, bool with_masks) {
  SceneContext ctx;
  ctx.scene = &scene;
  ctx.coarse = backbone::oracle_coarse(scene.depth_true, scene.image, cfg.oracle);
  ctx.gt_norm = minmax_normalize(scene.depth_labeled);
  if (with_masks) ctx.masks = bfm::compute_masks(coarse_at_scene_resolution(ctx), scene.depth_labeled, cfg.bfm);
  return ctx;
}

DepthMap coarse_at_scene_resolution(const SceneContext& ctx) {
  return resize_bilinear(ctx.coarse.depth, ctx.height(), ctx.width());
}

fusion::NetInputs<float> patch_inputs(const SceneContext& ctx, const PatchRect& rect,
                                      std::uint64_t patch_index, const RunConfig& cfg) {
  const int r = cfg.net.patch_res;
  const int h = ctx.height();
  const int w = ctx.width();
  fusion::NetInputs<float> in;
  in.rgb = resize_bilinear(crop(ctx.scene->image, rect), r, r).planes();
  in.coarse_roi = roi_resample(ctx.coarse.depth, h, w, rect, r, r);
  backbone::BackboneOutput fine = backbone::oracle_fine(ctx.scene->depth_true, rect, patch_index, cfg.oracle);
  in.fine = std::move(fine.depth);
  for (int j = 0; j < kPyramidLevels; ++j) {
    const int s = cfg.net.level_size(j);
    in.coarse_features.push_back(roi_resample(ctx.coarse.features.levels[j], h, w, rect, s, s));
  }
  in.fine_features = std::move(fine.features.levels);
  return in;
}

template <typename T>
fusion::NetInputs<T> cast_inputs(const fusion::NetInputs<float>& in) {
  fusion::NetInputs<T> out;
  out.rgb = tensor_cast<T>(in.rgb);
  out.coarse_roi = raster_cast<T>(in.coarse_roi);
  out.fine = raster_cast<T>(in.fine);
  for (const auto& f : in.coarse_features) out.coarse_features.push_back(tensor_cast<T>(f));
  for (const auto& f : in.fine_features) out.fine_features.push_back(tensor_cast<T>(f));
  return out;
}

template fusion::NetInputs<float> cast_inputs<float>(const fusion::NetInputs<float>&);
template fusion::NetInputs<double> cast_inputs<double>(const fusion::NetInputs<float>&);

DepthMap refine(const fusion::ResidualNet& net, const fusion::ParameterStore<float>& params,
                const fusion::NetInputs<float>& in) {
  const auto out = net.forward(in, params);
  return fusion::refine_patch(in.coarse_roi, out.residual);
}

InferResult infer_scene(const fusion::ResidualNet& net, const fusion::ParameterStore<float>& params,
                        const SceneContext& ctx, const tiling::GridSpec& grid, const RunConfig& cfg) {
  InferResult res;
  const auto cells = tiling::partition_grid(ctx.width(), ctx.height(), grid);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto in = patch_inputs(ctx, cells[k], kInferIndexBase + k, cfg);
    res.refined.push_back(refine(net, params, in));
    res.coarse_rois.push_back(in.coarse_roi);
  }
  res.merged = tiling::reassemble_inference(ctx.width(), ctx.height(), grid, res.refined);
  return res;
}

std::vector<tiling::OverlapGroup> ce_groups(int scene_w, int scene_h, int patch, int overlap, int count,
                                            std::uint64_t seed, std::size_t scene_index) {
  const int side = 2 * patch - overlap;
  if (side > scene_w || side > scene_h) throw ConfigError("CE group does not fit inside the scene");
  Rng rng = Rng(seed, 0xce).fork(scene_index);
  std::vector<tiling::OverlapGroup> out;
  for (int g = 0; g < count; ++g) {
    const int x0 = rng.uniform_int(0, scene_w - side);
    const int y0 = rng.uniform_int(0, scene_h - side);
    out.push_back(tiling::make_overlap_group(PatchRect{x0, y0, side, side}, patch, patch));
  }
  return out;
}

double scene_consistency_error(const fusion::ResidualNet& net,
                               const fusion::ParameterStore<float>& params, const SceneContext& ctx,
                               const std::vector<tiling::OverlapGroup>& groups, const RunConfig& cfg) {
  if (groups.empty()) throw MetricError("consistency error needs at least one group");
  double sum = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto refiner = [&](int i, const PatchRect& rect) {
      const auto in = patch_inputs(ctx, rect, kCeIndexBase + 4 * g + i, cfg);
      return resize_bilinear(refine(net, params, in), rect.h, rect.w);
    };
    sum += metrics::consistency_error(refiner, groups[g]);
  }
  return sum / static_cast<double>(groups.size());
}

MetricSelection MetricSelection::parse(const std::string& list) {
  if (list.empty() || list == "all") return {};
  MetricSelection s{false, false, false, false, false};
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "absrel") s.absrel = true;
    else if (name == "delta1") s.delta1 = true;
    else if (name == "d3r") s.d3r = true;
    else if (name == "br") s.br = true;
    else if (name == "ce") s.ce = true;
    else throw ConfigError("unknown metric '" + name + "' (expected absrel, delta1, d3r, br, ce)");
  }
  return s;
}

SceneEval evaluate_scene(const fusion::ResidualNet& net, const fusion::ParameterStore<float>& params,
                         const data::Scene& scene, std::size_t scene_index, const RunConfig& cfg,
                         const MetricSelection& sel) {
  const SceneContext ctx = prepare_scene(scene, cfg, false);
  const DepthMap& target = cfg.eval.target == "true" ? scene.depth_true : scene.depth_labeled;
  const BinaryMask valid(target.height(), target.width(), 1);
  const DepthMap pred = infer_scene(net, params, ctx, cfg.grid, cfg).merged;
  const DepthMap aligned = metrics::align_scale_shift(pred, target, valid);

  SceneEval ev;
  ev.report.pixel_count = valid.size();
  if (sel.absrel) ev.report.absrel = metrics::absrel(aligned, target, valid);
  if (sel.delta1) ev.report.delta1 = metrics::delta1(aligned, target, valid);
  if (sel.d3r) ev.report.d3r = metrics::d3r(pred, target, cfg.eval.d3r_cell, cfg.eval.d3r_threshold);
  if (sel.br) {
    bfm::BfmConfig edge_cfg = cfg.bfm;
    edge_cfg.edge_grad_threshold = cfg.eval.edge_threshold;
    ev.report.br = metrics::boundary_recall(bfm::edge_map(pred, edge_cfg), scene.object_edges, cfg.eval.br_tol);
  }
  if (sel.ce && cfg.eval.ce_groups > 0) {
    const auto groups = ce_groups(ctx.width(), ctx.height(), cfg.train.patch_size, cfg.eval.ce_overlap,
                                  cfg.eval.ce_groups, cfg.seed, scene_index);
    ev.report.ce = scene_consistency_error(net, params, ctx, groups, cfg);
  }

  // Glass probe: always against the physically correct depth.
  const DepthMap aligned_true = cfg.eval.target == "true"
                                    ? aligned
                                    : metrics::align_scale_shift(pred, scene.depth_true, valid);
  const BinaryMask& glass = scene.transparent_mask;
  ev.transparent.transparent_pixels = mask_count(glass);
  if (ev.transparent.transparent_pixels > 0)
    ev.transparent.transparent_absrel = metrics::absrel(aligned_true, scene.depth_true, glass);
  const BinaryMask opaque = mask_not(glass);
  if (mask_count(opaque) > 0) ev.transparent.opaque_absrel = metrics::absrel(aligned_true, scene.depth_true, opaque);
  return ev;
}

}  // namespace pro::cli
