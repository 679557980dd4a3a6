#pragma once

#include <cstdint>

#include "pro/core/raster.hpp"

namespace pro::backbone {

struct BackboneOutput {
  DepthMap depth;           // working_res x working_res
  FeaturePyramid features;  // level j is working_res / 2^(j+1)
};

struct OracleConfig {
  int working_res = 128;
  double blur_sigma = 4.0;
  double gamma = 1.2;
  // Half-widths: a_i in [1 - scale, 1 + scale], b_i in [-shift, shift].
  double jitter_scale_range = 0.25;
  double jitter_shift_range = 0.15;
  int feature_channels = 16;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Jitter {
  double scale = 1.0;
  double shift = 0.0;
};

// Pure function of (cfg.seed, patch_index).
Jitter patch_jitter(const OracleConfig& cfg, std::uint64_t patch_index);

// The frozen depth model. `coarse` sees the downsized full frame, `fine` one
// high-resolution patch of it.
class DepthBackbone {
 public:
  virtual ~DepthBackbone() = default;
  virtual BackboneOutput coarse(const RgbImage& image) const = 0;
  virtual BackboneOutput fine(const RgbImage& image, const PatchRect& patch,
                              std::uint64_t patch_index) const = 0;
};

BackboneOutput oracle_coarse(const DepthMap& scene_gt, const RgbImage& img, const OracleConfig& cfg);
BackboneOutput oracle_fine(const DepthMap& scene_gt, const PatchRect& patch,
                           std::uint64_t patch_index, const OracleConfig& cfg);

// Five-level pyramid of `depth` (binomial pyramid, first level already
// halved), each level lifted to cfg.feature_channels channels by a fixed
// seeded linear map of (value, d/dx, d/dy, 1).
FeaturePyramid oracle_features(const DepthMap& depth, const OracleConfig& cfg);

// Reads depth from a scene's ground truth instead of running a network.
class OracleBackbone : public DepthBackbone {
 public:
  OracleBackbone(DepthMap scene_depth, OracleConfig cfg);
  BackboneOutput coarse(const RgbImage& image) const override;
  BackboneOutput fine(const RgbImage& image, const PatchRect& patch,
                      std::uint64_t patch_index) const override;
  const OracleConfig& config() const { return cfg_; }

 private:
  DepthMap depth_;
  OracleConfig cfg_;
};

}  // namespace pro::backbone
