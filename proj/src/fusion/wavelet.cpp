#include "pro/fusion/wavelet.hpp"

namespace pro::fusion {

template <typename T>
WaveletBands<T> haar_dwt(const Tensor<T>& f) {
  if (f.height() % 2 != 0 || f.width() % 2 != 0)
    throw ShapeError("haar_dwt requires even dimensions, got " + std::to_string(f.height()) + "x" +
                     std::to_string(f.width()));
  const int c = f.channels();
  const int h = f.height() / 2;
  const int w = f.width() / 2;
  WaveletBands<T> b{Tensor<T>(c, h, w), Tensor<T>(c, h, w), Tensor<T>(c, h, w), Tensor<T>(c, h, w)};
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const T a = f(k, 2 * y, 2 * x);
        const T bb = f(k, 2 * y, 2 * x + 1);
        const T cc = f(k, 2 * y + 1, 2 * x);
        const T d = f(k, 2 * y + 1, 2 * x + 1);
        b.ll(k, y, x) = (a + bb + cc + d) / T(2);
        b.lh(k, y, x) = (a + bb - cc - d) / T(2);
        b.hl(k, y, x) = (a - bb + cc - d) / T(2);
        b.hh(k, y, x) = (a - bb - cc + d) / T(2);
      }
  return b;
}

template <typename T>
Tensor<T> haar_idwt(const WaveletBands<T>& b) {
  if (!b.ll.same_shape(b.lh) || !b.ll.same_shape(b.hl) || !b.ll.same_shape(b.hh))
    throw ShapeError("haar_idwt: sub-band dimensions differ");
  const int c = b.ll.channels();
  const int h = b.ll.height();
  const int w = b.ll.width();
  Tensor<T> f(c, 2 * h, 2 * w);
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const T ll = b.ll(k, y, x);
        const T lh = b.lh(k, y, x);
        const T hl = b.hl(k, y, x);
        const T hh = b.hh(k, y, x);
        f(k, 2 * y, 2 * x) = (ll + lh + hl + hh) / T(2);
        f(k, 2 * y, 2 * x + 1) = (ll + lh - hl - hh) / T(2);
        f(k, 2 * y + 1, 2 * x) = (ll - lh + hl - hh) / T(2);
        f(k, 2 * y + 1, 2 * x + 1) = (ll - lh - hl + hh) / T(2);
      }
  return f;
}

template WaveletBands<float> haar_dwt(const Tensor<float>&);
template WaveletBands<double> haar_dwt(const Tensor<double>&);
template Tensor<float> haar_idwt(const WaveletBands<float>&);
template Tensor<double> haar_idwt(const WaveletBands<double>&);

}  // namespace pro::fusion
