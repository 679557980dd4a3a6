#pragma once

#include <cstddef>
#include <vector>

#include "pro/core/raster.hpp"
#include "pro/fusion/params.hpp"

namespace pro::fusion {

inline constexpr double kLeakySlope = 0.1;

// A square convolution bound to weight [cout, cin, k, k] and bias [cout]
// entries of a ParameterStore. Padding is k / 2 (shape preserving at
// stride 1, halving at stride 2 for even inputs).
struct Conv2d {
  int cin = 0;
  int cout = 0;
  int k = 3;
  int stride = 1;
  std::size_t weight = 0;  // parameter index
  std::size_t bias = 0;    // parameter index

  template <typename T>
  Tensor<T> forward(const Tensor<T>& in, const ParameterStore<T>& params) const;

  // Accumulates weight/bias gradients into `params`; writes the input
  // gradient into *grad_in when it is non-null.
  template <typename T>
  void backward(const Tensor<T>& in, const Tensor<T>& grad_out, ParameterStore<T>& params,
                Tensor<T>* grad_in) const;

  // Registers "<name>.w" and "<name>.b" and returns the bound layer.
  template <typename T>
  static Conv2d create(ParameterStore<T>& params, const std::string& name, int cin, int cout, int k,
                       int stride);
};

template <typename T>
void leaky_relu_inplace(Tensor<T>& t);
// Multiplies grad by the slope evaluated at the activation output.
template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& out, Tensor<T>& grad);

template <typename T>
Tensor<T> upsample2_nearest(const Tensor<T>& in);
template <typename T>
Tensor<T> upsample2_nearest_backward(const Tensor<T>& grad_out);

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts);
// Inverse of concat_channels for gradients: returns the slice of channels
// [first, first + count).
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, int first, int count);

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src);

}  // namespace pro::fusion
