#include "pro/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pro {
namespace {

void check_crop(int height, int width, const PatchRect& rect) {
  if (rect.w < 1 || rect.h < 1) throw BoundsError("crop: empty " + to_string(rect));
  if (rect.x0 < 0) throw BoundsError("crop: left edge x0=" + std::to_string(rect.x0) + " < 0");
  if (rect.y0 < 0) throw BoundsError("crop: top edge y0=" + std::to_string(rect.y0) + " < 0");
  if (rect.x1() > width)
    throw BoundsError("crop: right edge " + std::to_string(rect.x1()) + " exceeds width " +
                      std::to_string(width));
  if (rect.y1() > height)
    throw BoundsError("crop: bottom edge " + std::to_string(rect.y1()) + " exceeds height " +
                      std::to_string(height));
}

// Per-output-index source taps for one axis of a bilinear resample.
struct AxisTaps {
  std::vector<int> i0;
  std::vector<int> i1;
  std::vector<double> frac;
};

AxisTaps taps_from_coords(const std::vector<double>& coords, int n_in) {
  AxisTaps t;
  t.i0.resize(coords.size());
  t.i1.resize(coords.size());
  t.frac.resize(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const double c = std::clamp(coords[k], 0.0, static_cast<double>(n_in - 1));
    int a = static_cast<int>(std::floor(c));
    if (a > n_in - 2) a = std::max(0, n_in - 2);
    const int b = std::min(a + 1, n_in - 1);
    t.i0[k] = a;
    t.i1[k] = b;
    t.frac[k] = (b == a) ? 0.0 : c - a;
  }
  return t;
}

double corner_aligned(int k, int n_in, int n_out) {
  if (n_out == 1) return 0.5 * (n_in - 1);
  return static_cast<double>(k) * (n_in - 1) / (n_out - 1);
}

AxisTaps resize_taps(int n_in, int n_out) {
  std::vector<double> coords(n_out);
  for (int k = 0; k < n_out; ++k) coords[k] = corner_aligned(k, n_in, n_out);
  return taps_from_coords(coords, n_in);
}

AxisTaps roi_taps(int frame_n, int map_n, int start, int extent, int n_out) {
  std::vector<double> coords(n_out);
  for (int k = 0; k < n_out; ++k) {
    const double parent = start + corner_aligned(k, extent, n_out);
    coords[k] = frame_n > 1 ? parent * (map_n - 1) / (frame_n - 1) : 0.5 * (map_n - 1);
  }
  return taps_from_coords(coords, map_n);
}

template <typename T>
void sample_plane(const T* src, int src_w, const AxisTaps& ty, const AxisTaps& tx, T* dst) {
  const int out_h = static_cast<int>(ty.i0.size());
  const int out_w = static_cast<int>(tx.i0.size());
  for (int y = 0; y < out_h; ++y) {
    const T* r0 = src + static_cast<std::size_t>(ty.i0[y]) * src_w;
    const T* r1 = src + static_cast<std::size_t>(ty.i1[y]) * src_w;
    const double fy = ty.frac[y];
    for (int x = 0; x < out_w; ++x) {
      const double fx = tx.frac[x];
      const double top = r0[tx.i0[x]] + (fx == 0.0 ? 0.0 : fx * (double(r0[tx.i1[x]]) - r0[tx.i0[x]]));
      if (fy == 0.0) {
        dst[static_cast<std::size_t>(y) * out_w + x] = static_cast<T>(top);
        continue;
      }
      const double bot = r1[tx.i0[x]] + (fx == 0.0 ? 0.0 : fx * (double(r1[tx.i1[x]]) - r1[tx.i0[x]]));
      dst[static_cast<std::size_t>(y) * out_w + x] = static_cast<T>(top + fy * (bot - top));
    }
  }
}

void check_resize(int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize target must be at least 1x1");
}

}  // namespace

template <typename T>
Raster<T> crop(const Raster<T>& raster, const PatchRect& rect) {
  check_crop(raster.height(), raster.width(), rect);
  Raster<T> out(rect.h, rect.w);
  for (int y = 0; y < rect.h; ++y)
    std::copy_n(raster.row(rect.y0 + y) + rect.x0, rect.w, out.row(y));
  return out;
}

Tensor<float> crop(const Tensor<float>& tensor, const PatchRect& rect) {
  check_crop(tensor.height(), tensor.width(), rect);
  Tensor<float> out(tensor.channels(), rect.h, rect.w);
  for (int c = 0; c < tensor.channels(); ++c)
    for (int y = 0; y < rect.h; ++y)
      for (int x = 0; x < rect.w; ++x) out(c, y, x) = tensor(c, rect.y0 + y, rect.x0 + x);
  return out;
}

RgbImage crop(const RgbImage& image, const PatchRect& rect) {
  return RgbImage(crop(image.planes(), rect));
}

template <typename T>
Raster<T> resize_bilinear(const Raster<T>& map, int out_h, int out_w) {
  check_resize(out_h, out_w);
  if (out_h == map.height() && out_w == map.width()) return map;
  Raster<T> out(out_h, out_w);
  sample_plane(map.data(), map.width(), resize_taps(map.height(), out_h),
               resize_taps(map.width(), out_w), out.data());
  return out;
}

Tensor<float> resize_bilinear(const Tensor<float>& tensor, int out_h, int out_w) {
  check_resize(out_h, out_w);
  if (out_h == tensor.height() && out_w == tensor.width()) return tensor;
  Tensor<float> out(tensor.channels(), out_h, out_w);
  const AxisTaps ty = resize_taps(tensor.height(), out_h);
  const AxisTaps tx = resize_taps(tensor.width(), out_w);
  for (int c = 0; c < tensor.channels(); ++c)
    sample_plane(tensor.plane(c), tensor.width(), ty, tx, out.plane(c));
  return out;
}

RgbImage resize_bilinear(const RgbImage& image, int out_h, int out_w) {
  return RgbImage(resize_bilinear(image.planes(), out_h, out_w));
}

template <typename T>
Raster<T> resize_bilinear_adjoint(const Raster<T>& grad_out, int in_h, int in_w) {
  check_resize(in_h, in_w);
  if (grad_out.height() == in_h && grad_out.width() == in_w) return grad_out;
  const AxisTaps ty = resize_taps(in_h, grad_out.height());
  const AxisTaps tx = resize_taps(in_w, grad_out.width());
  std::vector<double> acc(static_cast<std::size_t>(in_h) * in_w, 0.0);
  for (int y = 0; y < grad_out.height(); ++y) {
    const double fy = ty.frac[y];
    for (int x = 0; x < grad_out.width(); ++x) {
      const double fx = tx.frac[x];
      const double g = grad_out(y, x);
      acc[static_cast<std::size_t>(ty.i0[y]) * in_w + tx.i0[x]] += g * (1 - fy) * (1 - fx);
      acc[static_cast<std::size_t>(ty.i0[y]) * in_w + tx.i1[x]] += g * (1 - fy) * fx;
      acc[static_cast<std::size_t>(ty.i1[y]) * in_w + tx.i0[x]] += g * fy * (1 - fx);
      acc[static_cast<std::size_t>(ty.i1[y]) * in_w + tx.i1[x]] += g * fy * fx;
    }
  }
  Raster<T> out(in_h, in_w);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<T>(acc[i]);
  return out;
}

Raster<float> roi_resample(const Raster<float>& map, int frame_h, int frame_w,
                           const PatchRect& rect, int out_h, int out_w) {
  check_resize(out_h, out_w);
  if (!rect.within(frame_w, frame_h) || rect.empty())
    throw BoundsError("roi: " + to_string(rect) + " outside frame " + std::to_string(frame_w) +
                      "x" + std::to_string(frame_h));
  Raster<float> out(out_h, out_w);
  sample_plane(map.data(), map.width(), roi_taps(frame_h, map.height(), rect.y0, rect.h, out_h),
               roi_taps(frame_w, map.width(), rect.x0, rect.w, out_w), out.data());
  return out;
}

Tensor<float> roi_resample(const Tensor<float>& map, int frame_h, int frame_w,
                           const PatchRect& rect, int out_h, int out_w) {
  check_resize(out_h, out_w);
  if (!rect.within(frame_w, frame_h) || rect.empty())
    throw BoundsError("roi: " + to_string(rect) + " outside frame " + std::to_string(frame_w) +
                      "x" + std::to_string(frame_h));
  Tensor<float> out(map.channels(), out_h, out_w);
  const AxisTaps ty = roi_taps(frame_h, map.height(), rect.y0, rect.h, out_h);
  const AxisTaps tx = roi_taps(frame_w, map.width(), rect.x0, rect.w, out_w);
  for (int c = 0; c < map.channels(); ++c)
    sample_plane(map.plane(c), map.width(), ty, tx, out.plane(c));
  return out;
}

template <typename T>
MinMax min_max(const Raster<T>& map) {
  if (map.empty()) throw ShapeError("min_max of an empty raster");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (T v : map.values()) {
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  return {lo, hi};
}

template <typename T>
Raster<T> minmax_normalize(const Raster<T>& map, double eps) {
  const MinMax mm = min_max(map);
  const double scale = 1.0 / (mm.max - mm.min + eps);
  Raster<T> out(map.height(), map.width());
  for (std::size_t i = 0; i < map.size(); ++i)
    out[i] = static_cast<T>((static_cast<double>(map[i]) - mm.min) * scale);
  return out;
}

Raster<float> gaussian_blur(const Raster<float>& map, double sigma) {
  if (sigma <= 0.0) return map;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    sum += kernel[k + radius];
  }
  for (double& k : kernel) k /= sum;

  const int h = map.height();
  const int w = map.width();
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * map(y, std::clamp(x + k, 0, w - 1));
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  Raster<float> out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      out(y, x) = static_cast<float>(acc);
    }
  return out;
}

Raster<float> pyr_down(const Raster<float>& map) {
  static constexpr double kTaps[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  const int h = map.height();
  const int w = map.width();
  const int oh = h / 2;
  const int ow = w / 2;
  if (oh < 1 || ow < 1) throw ShapeError("pyr_down: raster too small");
  // Horizontal pass only at even columns, vertical pass only at even rows.
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * map(y, std::clamp(2 * x + k, 0, w - 1));
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  Raster<float> out(oh, ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k)
        acc += kTaps[k + 2] * tmp[static_cast<std::size_t>(std::clamp(2 * y + k, 0, h - 1)) * ow + x];
      out(y, x) = static_cast<float>(acc);
    }
  return out;
}

namespace {
void check_same(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw ShapeError("mask dimensions differ");
}
}  // namespace

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  check_same(a, b);
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  check_same(a, b);
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

BinaryMask mask_not(const BinaryMask& a) {
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ? 0 : 1;
  return out;
}

std::size_t mask_count(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v ? 1 : 0;
  return n;
}

double mask_mean(const BinaryMask& m) {
  if (m.empty()) throw ShapeError("mean of an empty mask");
  return static_cast<double>(mask_count(m)) / static_cast<double>(m.size());
}

template Raster<float> crop(const Raster<float>&, const PatchRect&);
template Raster<double> crop(const Raster<double>&, const PatchRect&);
template Raster<std::uint8_t> crop(const Raster<std::uint8_t>&, const PatchRect&);
template Raster<float> resize_bilinear(const Raster<float>&, int, int);
template Raster<double> resize_bilinear(const Raster<double>&, int, int);
template Raster<float> resize_bilinear_adjoint(const Raster<float>&, int, int);
template Raster<double> resize_bilinear_adjoint(const Raster<double>&, int, int);
template Raster<float> minmax_normalize(const Raster<float>&, double);
template Raster<double> minmax_normalize(const Raster<double>&, double);
template MinMax min_max(const Raster<float>&);
template MinMax min_max(const Raster<double>&);

}  // namespace pro
