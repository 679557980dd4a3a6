#include "pro/core/raster.hpp"

#include <cmath>

namespace pro {

std::string to_string(const PatchRect& r) {
  return "rect(x0=" + std::to_string(r.x0) + ", y0=" + std::to_string(r.y0) +
         ", w=" + std::to_string(r.w) + ", h=" + std::to_string(r.h) + ")";
}

RgbImage::RgbImage(Tensor<float> planes) : planes_(std::move(planes)) {
  if (planes_.channels() != 3) throw ShapeError("RgbImage requires exactly 3 channels");
}

void FeaturePyramid::validate() const {
  if (levels.size() != static_cast<std::size_t>(kPyramidLevels))
    throw ShapeError("feature pyramid must have exactly 5 levels, got " +
                     std::to_string(levels.size()));
  for (std::size_t j = 1; j < levels.size(); ++j) {
    const auto& prev = levels[j - 1];
    const auto& cur = levels[j];
    if (cur.channels() != prev.channels() || cur.height() != prev.height() / 2 ||
        cur.width() != prev.width() / 2)
      throw ShapeError("feature pyramid level " + std::to_string(j) +
                       " is not half of the previous level");
  }
}

bool all_finite(const DepthMap& map) {
  for (float v : map.values())
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const DepthMap& map, const char* what) {
  if (!all_finite(map)) throw NumericError(std::string(what) + " contains non-finite values");
}

}  // namespace pro
