#pragma once

#include "pro/core/raster.hpp"

namespace pro {

inline constexpr double kNormEps = 1e-6;

template <typename T>
Raster<T> crop(const Raster<T>& raster, const PatchRect& rect);
Tensor<float> crop(const Tensor<float>& tensor, const PatchRect& rect);
RgbImage crop(const RgbImage& image, const PatchRect& rect);

// Corner-aligned bilinear resampling: output sample k maps to input
// coordinate k * (in - 1) / (out - 1), so the extreme samples coincide.
// A one-sample axis maps to the input centre.
template <typename T>
Raster<T> resize_bilinear(const Raster<T>& map, int out_h, int out_w);
Tensor<float> resize_bilinear(const Tensor<float>& tensor, int out_h, int out_w);
RgbImage resize_bilinear(const RgbImage& image, int out_h, int out_w);

// Transpose of resize_bilinear: scatters an output-sized gradient back onto
// the input grid of size (in_h, in_w).
template <typename T>
Raster<T> resize_bilinear_adjoint(const Raster<T>& grad_out, int in_h, int in_w);

// Region-of-interest resampling. `rect` is expressed in the coordinates of a
// parent frame of size (frame_h, frame_w); `map` covers that whole frame at
// its own (usually lower) resolution. Output pixel (i, j) samples the parent
// point (y0 + i * (h - 1) / (out_h - 1), x0 + j * (w - 1) / (out_w - 1)),
// mapped corner-aligned into `map`. Two rects that share a parent pixel at
// native resolution therefore read the same value for it.
Raster<float> roi_resample(const Raster<float>& map, int frame_h, int frame_w,
                           const PatchRect& rect, int out_h, int out_w);
Tensor<float> roi_resample(const Tensor<float>& map, int frame_h, int frame_w,
                           const PatchRect& rect, int out_h, int out_w);

// (map - min) / (max - min + eps); a constant map becomes all zeros.
template <typename T>
Raster<T> minmax_normalize(const Raster<T>& map, double eps = kNormEps);

struct MinMax {
  double min;
  double max;
};
template <typename T>
MinMax min_max(const Raster<T>& map);

// Separable Gaussian blur with clamped borders; sigma <= 0 is the identity.
Raster<float> gaussian_blur(const Raster<float>& map, double sigma);

// 5-tap binomial low-pass followed by 2x decimation (floor dims).
Raster<float> pyr_down(const Raster<float>& map);

// Masks.
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_not(const BinaryMask& a);
std::size_t mask_count(const BinaryMask& m);
double mask_mean(const BinaryMask& m);

}  // namespace pro
