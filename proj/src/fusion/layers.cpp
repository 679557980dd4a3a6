#include "pro/fusion/layers.hpp"

#include <Eigen/Core>

namespace pro::fusion {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int out_dim(int n, int k, int stride) { return (n + 2 * (k / 2) - k) / stride + 1; }

// Rows ordered (ci, ky, kx) to match the [cout, cin, k, k] weight layout.
template <typename T>
RowMat<T> im2col(const Tensor<T>& in, int k, int stride, int oh, int ow) {
  const int pad = k / 2;
  const int h = in.height();
  const int w = in.width();
  RowMat<T> col(static_cast<Eigen::Index>(in.channels()) * k * k, static_cast<Eigen::Index>(oh) * ow);
  for (int c = 0; c < in.channels(); ++c) {
    const T* src = in.plane(c);
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col.row((static_cast<Eigen::Index>(c) * k + ky) * k + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          T* drow = dst + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(drow, drow + ow, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            drow[ox] = (ix >= 0 && ix < w) ? srow[ix] : T(0);
          }
        }
      }
  }
  return col;
}

template <typename T>
void col2im_add(const RowMat<T>& col, int k, int stride, int oh, int ow, Tensor<T>& grad_in) {
  const int pad = k / 2;
  const int h = grad_in.height();
  const int w = grad_in.width();
  for (int c = 0; c < grad_in.channels(); ++c) {
    T* dst = grad_in.plane(c);
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col.row((static_cast<Eigen::Index>(c) * k + ky) * k + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const T* srow = src + static_cast<std::size_t>(oy) * ow;
          T* drow = dst + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) drow[ix] += srow[ox];
          }
        }
      }
  }
}

}  // namespace

template <typename T>
Conv2d Conv2d::create(ParameterStore<T>& params, const std::string& name, int cin, int cout, int k,
                      int stride) {
  Conv2d c;
  c.cin = cin;
  c.cout = cout;
  c.k = k;
  c.stride = stride;
  c.weight = params.add(name + ".w", {cout, cin, k, k});
  c.bias = params.add(name + ".b", {cout});
  return c;
}

template <typename T>
Tensor<T> Conv2d::forward(const Tensor<T>& in, const ParameterStore<T>& params) const {
  if (in.channels() != cin)
    throw ShapeError("conv expects " + std::to_string(cin) + " input channels, got " +
                     std::to_string(in.channels()));
  const int oh = out_dim(in.height(), k, stride);
  const int ow = out_dim(in.width(), k, stride);
  const auto& wv = params[weight].value;
  const auto& bv = params[bias].value;
  Tensor<T> out(cout, oh, ow);
  Eigen::Map<RowMat<T>> o(out.data(), cout, static_cast<Eigen::Index>(oh) * ow);
  Eigen::Map<const RowMat<T>> wm(wv.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
  if (k == 1 && stride == 1) {
    Eigen::Map<const RowMat<T>> im(in.data(), cin, static_cast<Eigen::Index>(oh) * ow);
    o.noalias() = wm * im;
  } else {
    o.noalias() = wm * im2col(in, k, stride, oh, ow);
  }
  for (int c = 0; c < cout; ++c) o.row(c).array() += bv[c];
  return out;
}

template <typename T>
void Conv2d::backward(const Tensor<T>& in, const Tensor<T>& grad_out, ParameterStore<T>& params,
                      Tensor<T>* grad_in) const {
  const int oh = grad_out.height();
  const int ow = grad_out.width();
  const Eigen::Index kk = static_cast<Eigen::Index>(cin) * k * k;
  Eigen::Map<const RowMat<T>> go(grad_out.data(), cout, static_cast<Eigen::Index>(oh) * ow);
  Eigen::Map<RowMat<T>> gw(params[weight].grad.data(), cout, kk);
  Eigen::Map<const RowMat<T>> wm(params[weight].value.data(), cout, kk);
  auto& gb = params[bias].grad;
  for (int c = 0; c < cout; ++c) gb[c] += go.row(c).sum();

  if (k == 1 && stride == 1) {
    Eigen::Map<const RowMat<T>> im(in.data(), cin, static_cast<Eigen::Index>(oh) * ow);
    gw.noalias() += go * im.transpose();
    if (grad_in) {
      *grad_in = Tensor<T>(cin, in.height(), in.width());
      Eigen::Map<RowMat<T>> gi(grad_in->data(), cin, static_cast<Eigen::Index>(oh) * ow);
      gi.noalias() = wm.transpose() * go;
    }
    return;
  }
  const RowMat<T> col = im2col(in, k, stride, oh, ow);
  gw.noalias() += go * col.transpose();
  if (grad_in) {
    const RowMat<T> gcol = wm.transpose() * go;
    *grad_in = Tensor<T>(cin, in.height(), in.width());
    col2im_add(gcol, k, stride, oh, ow, *grad_in);
  }
}

template <typename T>
void leaky_relu_inplace(Tensor<T>& t) {
  for (auto& v : t.values())
    if (v < T(0)) v *= T(kLeakySlope);
}

template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& out, Tensor<T>& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (out[i] <= T(0)) grad[i] *= T(kLeakySlope);
}

template <typename T>
Tensor<T> upsample2_nearest(const Tensor<T>& in) {
  Tensor<T> out(in.channels(), in.height() * 2, in.width() * 2);
  for (int c = 0; c < in.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) out(c, y, x) = in(c, y / 2, x / 2);
  return out;
}

template <typename T>
Tensor<T> upsample2_nearest_backward(const Tensor<T>& g) {
  Tensor<T> out(g.channels(), g.height() / 2, g.width() / 2);
  for (int c = 0; c < out.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        out(c, y, x) = g(c, 2 * y, 2 * x) + g(c, 2 * y, 2 * x + 1) + g(c, 2 * y + 1, 2 * x) +
                       g(c, 2 * y + 1, 2 * x + 1);
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: nothing to concatenate");
  int channels = 0;
  for (const auto* p : parts) {
    if (p->height() != parts[0]->height() || p->width() != parts[0]->width())
      throw ShapeError("concat_channels: spatial dimensions differ");
    channels += p->channels();
  }
  Tensor<T> out(channels, parts[0]->height(), parts[0]->width());
  T* dst = out.data();
  for (const auto* p : parts) dst = std::copy(p->data(), p->data() + p->size(), dst);
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, int first, int count) {
  Tensor<T> out(count, t.height(), t.width());
  std::copy(t.plane(first), t.plane(first) + out.size(), out.data());
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_shape(src)) throw ShapeError("add_inplace: shapes differ");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

#define PRO_INSTANTIATE_LAYERS(T)                                                                 \
  template Conv2d Conv2d::create<T>(ParameterStore<T>&, const std::string&, int, int, int, int); \
  template Tensor<T> Conv2d::forward<T>(const Tensor<T>&, const ParameterStore<T>&) const;       \
  template void Conv2d::backward<T>(const Tensor<T>&, const Tensor<T>&, ParameterStore<T>&,      \
                                    Tensor<T>*) const;                                            \
  template void leaky_relu_inplace<T>(Tensor<T>&);                                                \
  template void leaky_relu_backward_inplace<T>(const Tensor<T>&, Tensor<T>&);                     \
  template Tensor<T> upsample2_nearest<T>(const Tensor<T>&);                                      \
  template Tensor<T> upsample2_nearest_backward<T>(const Tensor<T>&);                             \
  template Tensor<T> concat_channels<T>(const std::vector<const Tensor<T>*>&);                    \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, int, int);                               \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);

PRO_INSTANTIATE_LAYERS(float)
PRO_INSTANTIATE_LAYERS(double)

#undef PRO_INSTANTIATE_LAYERS

}  // namespace pro::fusion
