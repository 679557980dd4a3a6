#pragma once

#include "pro/core/raster.hpp"

namespace pro::fusion {

// Four sub-bands of one orthonormal Haar analysis step. For a 2x2 block
// [[a, b], [c, d]]:
//   ll = (a + b + c + d) / 2    lh = (a + b - c - d) / 2
//   hl = (a - b + c - d) / 2    hh = (a - b - c + d) / 2
template <typename T>
struct WaveletBands {
  Tensor<T> ll;
  Tensor<T> lh;
  Tensor<T> hl;
  Tensor<T> hh;

  Tensor<T>& band(int i) { return i == 0 ? ll : i == 1 ? lh : i == 2 ? hl : hh; }
  const Tensor<T>& band(int i) const { return i == 0 ? ll : i == 1 ? lh : i == 2 ? hl : hh; }
};

inline constexpr const char* kBandNames[4] = {"ll", "lh", "hl", "hh"};

// Requires even height and width.
template <typename T>
WaveletBands<T> haar_dwt(const Tensor<T>& f);

// Exact inverse of haar_dwt. Since the transform is orthonormal it is also
// its adjoint, which is what the backward passes rely on.
template <typename T>
Tensor<T> haar_idwt(const WaveletBands<T>& bands);

}  // namespace pro::fusion
