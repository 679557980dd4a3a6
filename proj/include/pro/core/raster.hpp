#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pro/core/aligned.hpp"
#include "pro/core/errors.hpp"

namespace pro {

// Integer rectangle in image coordinates. (x0, y0) is the inclusive
// top-left corner.
struct PatchRect {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  int x1() const { return x0 + w; }  // exclusive
  int y1() const { return y0 + h; }  // exclusive
  long long area() const { return static_cast<long long>(w) * h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1() && y >= y0 && y < y1(); }
  bool within(int width, int height) const {
    return x0 >= 0 && y0 >= 0 && x1() <= width && y1() <= height;
  }
  bool operator==(const PatchRect&) const = default;
};

// Geometric intersection; empty() when the rects do not overlap.
inline PatchRect intersect(const PatchRect& a, const PatchRect& b) {
  const int x0 = a.x0 > b.x0 ? a.x0 : b.x0;
  const int y0 = a.y0 > b.y0 ? a.y0 : b.y0;
  const int x1 = a.x1() < b.x1() ? a.x1() : b.x1();
  const int y1 = a.y1() < b.y1() ? a.y1() : b.y1();
  if (x1 <= x0 || y1 <= y0) return PatchRect{x0, y0, 0, 0};
  return PatchRect{x0, y0, x1 - x0, y1 - y0};
}

std::string to_string(const PatchRect& r);

// Single-channel row-major raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int height, int width, T fill = T{})
      : height_(height), width_(width) {
    if (height < 0 || width < 0) throw ShapeError("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(height) * width, fill);
  }
  Raster(int height, int width, std::vector<T> values)
      : height_(height), width_(width), data_(values.begin(), values.end()) {
    if (data_.size() != static_cast<std::size_t>(height) * width)
      throw ShapeError("raster value count does not match dimensions");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int y, int x) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Raster&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  AlignedVector<T> data_;
};

using DepthMap = Raster<float>;
// Boolean raster stored as 0/1 bytes.
using BinaryMask = Raster<std::uint8_t>;

template <typename To, typename From>
Raster<To> raster_cast(const Raster<From>& in) {
  Raster<To> out(in.height(), in.width());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<To>(in[i]);
  return out;
}

// Channel-major (C x H x W) multi-channel raster. Feature maps and the
// planar RGB image both live here.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(int channels, int height, int width, T fill = T{})
      : channels_(channels), height_(height), width_(width) {
    if (channels < 0 || height < 0 || width < 0)
      throw ShapeError("tensor dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  const T& operator()(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* plane(int c) { return data_.data() + c * plane_size(); }
  const T* plane(int c) const { return data_.data() + c * plane_size(); }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename U>
  bool same_shape(const Tensor<U>& o) const {
    return channels_ == o.channels() && height_ == o.height() && width_ == o.width();
  }

  Raster<T> channel(int c) const {
    Raster<T> out(height_, width_);
    std::copy(plane(c), plane(c) + plane_size(), out.data());
    return out;
  }
  void set_channel(int c, const Raster<T>& r) {
    if (r.height() != height_ || r.width() != width_) throw ShapeError("channel shape mismatch");
    std::copy(r.data(), r.data() + plane_size(), plane(c));
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool operator==(const Tensor&) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  AlignedVector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& in) {
  Tensor<To> out(in.channels(), in.height(), in.width());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<To>(in[i]);
  return out;
}

template <typename T>
Tensor<T> tensor_from_raster(const Raster<T>& r) {
  Tensor<T> out(1, r.height(), r.width());
  out.set_channel(0, r);
  return out;
}

// Planar RGB image, values in [0, 1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width) : planes_(3, height, width) {}
  explicit RgbImage(Tensor<float> planes);

  int height() const { return planes_.height(); }
  int width() const { return planes_.width(); }
  float& operator()(int c, int y, int x) { return planes_(c, y, x); }
  float operator()(int c, int y, int x) const { return planes_(c, y, x); }
  const Tensor<float>& planes() const { return planes_; }
  Tensor<float>& planes() { return planes_; }

  bool operator==(const RgbImage&) const = default;

 private:
  Tensor<float> planes_;
};

// Five-level feature stack; level j is (base >> j) on each side.
inline constexpr int kPyramidLevels = 5;

struct FeaturePyramid {
  std::vector<Tensor<float>> levels;

  int channels() const { return levels.empty() ? 0 : levels.front().channels(); }
  void validate() const;
};

void require_finite(const DepthMap& map, const char* what);
bool all_finite(const DepthMap& map);

}  // namespace pro
