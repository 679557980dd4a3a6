#pragma once

#include <cstdint>

#include "pro/core/raster.hpp"

namespace pro::data {

struct GenConfig {
  int size = 512;
  int min_primitives = 3;
  int max_primitives = 7;
  double transparent_prob = 0.3;
  double texture_scale = 1.0;  // spatial frequency multiplier of the procedural texture
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scene {
  RgbImage image;
  DepthMap depth_true;
  DepthMap depth_labeled;  // transparent surfaces carry the depth behind them
  BinaryMask object_edges;
  BinaryMask transparent_mask;
  std::uint64_t seed = 0;
};

// Layered composition of boxes, spheres and slanted planes over a receding
// floor. Transparent primitives are drawn as tinted glass with a bright frame
// and glint streaks; they own depth_true where they are front-most while
// depth_labeled keeps the nearest opaque surface.
Scene generate_scene(const GenConfig& cfg);

// Seed of scene `index` in a dataset generated from `base_seed`.
std::uint64_t scene_seed(std::uint64_t base_seed, std::uint64_t index);

}  // namespace pro::data
