#include "pro/backbone/backbone.hpp"

#include <cmath>

#include "pro/core/ops.hpp"
#include "pro/core/rng.hpp"

namespace pro::backbone {
namespace {

constexpr std::uint64_t kJitterStream = 0x6a17;
constexpr std::uint64_t kLiftStream = 0x11f7;

Tensor<float> lift(const Raster<float>& level, const OracleConfig& cfg) {
  const int h = level.height();
  const int w = level.width();
  const int c = cfg.feature_channels;
  Rng rng(cfg.seed, kLiftStream);
  std::vector<double> coef(static_cast<std::size_t>(c) * 4);
  for (auto& v : coef) v = rng.normal();
  Tensor<float> out(c, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = level(y, x);
      const double dx = 0.5 * (level(y, std::min(x + 1, w - 1)) - level(y, std::max(x - 1, 0)));
      const double dy = 0.5 * (level(std::min(y + 1, h - 1), x) - level(std::max(y - 1, 0), x));
      for (int k = 0; k < c; ++k) {
        const double* a = &coef[static_cast<std::size_t>(k) * 4];
        out(k, y, x) = static_cast<float>(a[0] * v + a[1] * dx * w / 8.0 + a[2] * dy * h / 8.0 +
                                          0.25 * a[3]);
      }
    }
  return out;
}

}  // namespace

void OracleConfig::validate() const {
  if (working_res < 64 || working_res % 64 != 0)
    throw ConfigError("oracle.working_res must be a positive multiple of 64");
  if (!(gamma > 0.0)) throw ConfigError("oracle.gamma must be > 0");
  if (blur_sigma < 0.0) throw ConfigError("oracle.blur_sigma must be >= 0");
  if (jitter_scale_range < 0.0 || jitter_shift_range < 0.0)
    throw ConfigError("oracle jitter ranges must be >= 0");
  if (jitter_scale_range >= 1.0) throw ConfigError("oracle.jitter_scale_range must be < 1");
  if (feature_channels < 1) throw ConfigError("oracle.feature_channels must be >= 1");
}

Jitter patch_jitter(const OracleConfig& cfg, std::uint64_t patch_index) {
  Rng rng = Rng(cfg.seed, kJitterStream).fork(patch_index);
  const double u = rng.uniform(-1.0, 1.0);
  const double v = rng.uniform(-1.0, 1.0);
  return Jitter{1.0 + cfg.jitter_scale_range * u, cfg.jitter_shift_range * v};
}

FeaturePyramid oracle_features(const DepthMap& depth, const OracleConfig& cfg) {
  FeaturePyramid p;
  Raster<float> level = depth;
  for (int j = 0; j < kPyramidLevels; ++j) {
    level = pyr_down(level);
    p.levels.push_back(lift(level, cfg));
  }
  return p;
}

BackboneOutput oracle_coarse(const DepthMap& scene_gt, const RgbImage& /*img*/,
                             const OracleConfig& cfg) {
  cfg.validate();
  const int r = cfg.working_res;
  DepthMap d = gaussian_blur(minmax_normalize(resize_bilinear(scene_gt, r, r)), cfg.blur_sigma);
  if (cfg.gamma != 1.0)
    for (auto& v : d.values()) v = static_cast<float>(std::pow(std::max(0.0f, v), cfg.gamma));
  BackboneOutput out;
  out.features = oracle_features(d, cfg);
  out.depth = std::move(d);
  return out;
}

BackboneOutput oracle_fine(const DepthMap& scene_gt, const PatchRect& patch,
                           std::uint64_t patch_index, const OracleConfig& cfg) {
  cfg.validate();
  const int r = cfg.working_res;
  DepthMap d = minmax_normalize(resize_bilinear(crop(scene_gt, patch), r, r));
  const Jitter j = patch_jitter(cfg, patch_index);
  if (j.scale != 1.0 || j.shift != 0.0)
    for (auto& v : d.values()) v = static_cast<float>(j.scale * v + j.shift);
  BackboneOutput out;
  out.features = oracle_features(d, cfg);
  out.depth = std::move(d);
  return out;
}

OracleBackbone::OracleBackbone(DepthMap scene_depth, OracleConfig cfg)
    : depth_(std::move(scene_depth)), cfg_(cfg) {
  cfg_.validate();
  require_finite(depth_, "oracle scene depth");
}

BackboneOutput OracleBackbone::coarse(const RgbImage& image) const {
  return oracle_coarse(depth_, image, cfg_);
}

BackboneOutput OracleBackbone::fine(const RgbImage& /*image*/, const PatchRect& patch,
                                    std::uint64_t patch_index) const {
  return oracle_fine(depth_, patch, patch_index, cfg_);
}

}  // namespace pro::backbone
