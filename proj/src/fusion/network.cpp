#include "pro/fusion/network.hpp"

#include <cmath>

#include "pro/core/rng.hpp"
#include "pro/fusion/wavelet.hpp"

namespace pro::fusion {

void NetConfig::validate() const {
  if (levels != 5) throw ConfigError("net.levels is fixed at 5");
  if (base_channels < 1) throw ConfigError("net.base_channels must be >= 1");
  const int unit = 1 << (levels + 1);
  if (patch_res < unit || patch_res % unit != 0)
    throw ConfigError("net.patch_res must be a positive multiple of " + std::to_string(unit) +
                      ", got " + std::to_string(patch_res));
}

template <typename T>
FfmLayer FfmLayer::create(ParameterStore<T>& params, const std::string& name, int channels) {
  FfmLayer f;
  for (int b = 0; b < 4; ++b)
    f.band[b] = Conv2d::create(params, name + "." + kBandNames[b], 2 * channels, channels, 3, 1);
  return f;
}

template <typename T>
Tensor<T> ffm_forward(const Tensor<T>& f_coarse_roi, const Tensor<T>& f_fine, const FfmLayer& layer,
                      const ParameterStore<T>& params, FfmCache<T>* cache) {
  if (!f_coarse_roi.same_shape(f_fine))
    throw ShapeError("ffm: coarse and fine features differ in shape");
  const WaveletBands<T> xc = haar_dwt(f_coarse_roi);
  const WaveletBands<T> xf = haar_dwt(f_fine);
  WaveletBands<T> fused;
  for (int b = 0; b < 4; ++b) {
    Tensor<T> in = concat_channels<T>({&xc.band(b), &xf.band(b)});
    Tensor<T> out = layer.band[b].forward(in, params);
    leaky_relu_inplace(out);
    fused.band(b) = out;
    if (cache) {
      cache->inputs[b] = std::move(in);
      cache->outputs[b] = std::move(out);
    }
  }
  return haar_idwt(fused);
}

template <typename T>
void ffm_backward(const FfmCache<T>& cache, const Tensor<T>& grad_out, const FfmLayer& layer,
                  ParameterStore<T>& params) {
  WaveletBands<T> g = haar_dwt(grad_out);  // adjoint of the orthonormal IDWT
  for (int b = 0; b < 4; ++b) {
    Tensor<T>& gb = g.band(b);
    leaky_relu_backward_inplace(cache.outputs[b], gb);
    layer.band[b].backward<T>(cache.inputs[b], gb, params, nullptr);
  }
}

ResidualNet::ResidualNet(NetConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  build(layout_);
}

template <typename T>
void ResidualNet::build(ParameterStore<T>& params) {
  const int c = cfg_.base_channels;
  for (int j = 0; j < 5; ++j)
    enc_[j] = Conv2d::create(params, "enc" + std::to_string(j), j == 0 ? 5 : c, c, 3, 2);
  for (int j = 0; j < 5; ++j) {
    const std::string lvl = std::to_string(j);
    ffm_[j] = FfmLayer::create(params, "ffm" + lvl, c);
    red_a_[j] = Conv2d::create(params, "reduce" + lvl + "a", 3 * c, c, 3, 1);
    red_b_[j] = Conv2d::create(params, "reduce" + lvl + "b", c, c, 3, 1);
  }
  for (int s = 0; s < 4; ++s) dec_[s] = Conv2d::create(params, "dec" + std::to_string(s), 2 * c, c, 3, 1);
  dec_[4] = Conv2d::create(params, "dec4", c + 5, c, 3, 1);
  head_ = Conv2d::create(params, "head", c, 1, 1, 1);
}

template <typename T>
ParameterStore<T> ResidualNet::make_parameters(std::uint64_t seed) const {
  ParameterStore<T> params;
  ResidualNet copy(*this);
  copy.build(params);
  const Rng root(seed, /*stream=*/0x9a7a);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.shape.size() != 4 || p.name.rfind("head", 0) == 0) continue;  // biases and head stay zero
    const int fan_in = p.shape[1] * p.shape[2] * p.shape[3];
    const double stddev = std::sqrt(2.0 / ((1.0 + kLeakySlope * kLeakySlope) * fan_in));
    Rng rng = root.fork(i);
    for (auto& v : p.value) v = static_cast<T>(stddev * rng.normal());
  }
  return params;
}

template <typename T>
void ResidualNet::check_parameters(const ParameterStore<T>& params) const {
  if (params.size() != layout_.size())
    throw VersionError("checkpoint has " + std::to_string(params.size()) +
                       " parameters, architecture expects " + std::to_string(layout_.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name != layout_[i].name || params[i].shape != layout_[i].shape)
      throw VersionError("checkpoint parameter '" + params[i].name +
                         "' does not match architecture parameter '" + layout_[i].name + "'");
}

template <typename T>
ResidualOutput<T> ResidualNet::forward(const NetInputs<T>& in, const ParameterStore<T>& params,
                                       NetTape<T>* tape) const {
  const int res = cfg_.patch_res;
  const int c = cfg_.base_channels;
  if (in.rgb.channels() != 3 || in.rgb.height() != res || in.rgb.width() != res ||
      in.coarse_roi.height() != res || in.coarse_roi.width() != res || in.fine.height() != res ||
      in.fine.width() != res)
    throw ShapeError("residual network inputs must be " + std::to_string(res) + "x" +
                     std::to_string(res));
  if (in.coarse_features.size() != 5 || in.fine_features.size() != 5)
    throw ShapeError("residual network expects 5-level feature pyramids");
  for (int j = 0; j < 5; ++j) {
    const int s = cfg_.level_size(j);
    for (const auto* f : {&in.coarse_features[j], &in.fine_features[j]})
      if (f->channels() != c || f->height() != s || f->width() != s)
        throw ShapeError("feature level " + std::to_string(j) + " must be " + std::to_string(c) +
                         "x" + std::to_string(s) + "x" + std::to_string(s));
  }

  NetTape<T> local;
  NetTape<T>& t = tape ? *tape : local;
  const Tensor<T> coarse = tensor_from_raster(in.coarse_roi);
  const Tensor<T> fine = tensor_from_raster(in.fine);
  t.x0 = concat_channels<T>({&in.rgb, &coarse, &fine});

  for (int j = 0; j < 5; ++j) {
    t.enc[j] = enc_[j].forward(j == 0 ? t.x0 : t.enc[j - 1], params);
    leaky_relu_inplace(t.enc[j]);
  }
  for (int j = 0; j < 5; ++j) {
    const Tensor<T> fused =
        ffm_forward(in.coarse_features[j], in.fine_features[j], ffm_[j], params, &t.ffm[j]);
    t.red_in[j] = concat_channels<T>({&fused, &in.coarse_features[j], &t.enc[j]});
    t.red_a[j] = red_a_[j].forward(t.red_in[j], params);
    leaky_relu_inplace(t.red_a[j]);
    t.red_b[j] = red_b_[j].forward(t.red_a[j], params);
    leaky_relu_inplace(t.red_b[j]);
  }
  const Tensor<T>* u = &t.red_b[4];
  for (int s = 0; s < 5; ++s) {
    const Tensor<T> up = upsample2_nearest(*u);
    const Tensor<T>& skip = s < 4 ? t.red_b[3 - s] : t.x0;
    t.dec_in[s] = concat_channels<T>({&up, &skip});
    t.dec_out[s] = dec_[s].forward(t.dec_in[s], params);
    leaky_relu_inplace(t.dec_out[s]);
    u = &t.dec_out[s];
  }
  const Tensor<T> r = head_.forward(t.dec_out[4], params);

  ResidualOutput<T> out;
  out.residual = r.channel(0);
  out.encoder = t.enc;
  return out;
}

template <typename T>
void ResidualNet::backward(const NetTape<T>& t, const Raster<T>& grad_residual,
                           ParameterStore<T>& params) const {
  const int c = cfg_.base_channels;
  std::array<Tensor<T>, 5> g_red;
  std::array<Tensor<T>, 5> g_enc;

  Tensor<T> g;
  head_.backward(t.dec_out[4], tensor_from_raster(grad_residual), params, &g);
  for (int s = 4; s >= 0; --s) {
    leaky_relu_backward_inplace(t.dec_out[s], g);
    Tensor<T> g_in;
    dec_[s].backward(t.dec_in[s], g, params, &g_in);
    if (s < 4) g_red[3 - s] = slice_channels(g_in, c, c);
    g = upsample2_nearest_backward(slice_channels(g_in, 0, c));
  }
  g_red[4] = std::move(g);

  for (int j = 4; j >= 0; --j) {
    Tensor<T>& gr = g_red[j];
    leaky_relu_backward_inplace(t.red_b[j], gr);
    Tensor<T> g_a;
    red_b_[j].backward(t.red_a[j], gr, params, &g_a);
    leaky_relu_backward_inplace(t.red_a[j], g_a);
    Tensor<T> g_in;
    red_a_[j].backward(t.red_in[j], g_a, params, &g_in);
    ffm_backward(t.ffm[j], slice_channels(g_in, 0, c), ffm_[j], params);
    g_enc[j] = slice_channels(g_in, 2 * c, c);
  }

  for (int j = 4; j >= 0; --j) {
    leaky_relu_backward_inplace(t.enc[j], g_enc[j]);
    if (j > 0) {
      Tensor<T> g_prev;
      enc_[j].backward(t.enc[j - 1], g_enc[j], params, &g_prev);
      add_inplace(g_enc[j - 1], g_prev);
    } else {
      enc_[0].backward<T>(t.x0, g_enc[0], params, nullptr);
    }
  }
}

ResidualResult residual_forward(const RgbImage& patch_rgb, const DepthMap& d_coarse_roi,
                                const DepthMap& d_fine, const FeaturePyramid& f_c_roi,
                                const FeaturePyramid& f_f, const ParameterStore<float>& params,
                                const NetConfig& cfg) {
  const ResidualNet net(cfg);
  net.check_parameters(params);
  f_c_roi.validate();
  f_f.validate();
  NetInputs<float> in{patch_rgb.planes(), d_coarse_roi, d_fine, f_c_roi.levels, f_f.levels};
  ResidualOutput<float> out = net.forward(in, params);
  ResidualResult r;
  r.residual = std::move(out.residual);
  r.encoder.levels.assign(out.encoder.begin(), out.encoder.end());
  return r;
}

template <typename T>
Raster<T> refine_patch(const Raster<T>& d_coarse_roi, const Raster<T>& residual) {
  if (!d_coarse_roi.same_shape(residual))
    throw ShapeError("refine_patch: coarse ROI and residual differ in shape");
  Raster<T> out = d_coarse_roi;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += residual[i];
  return out;
}

template Raster<float> refine_patch<float>(const Raster<float>&, const Raster<float>&);
template Raster<double> refine_patch<double>(const Raster<double>&, const Raster<double>&);

#define PRO_INSTANTIATE_NET(T)                                                                    \
  template FfmLayer FfmLayer::create<T>(ParameterStore<T>&, const std::string&, int);             \
  template Tensor<T> ffm_forward<T>(const Tensor<T>&, const Tensor<T>&, const FfmLayer&,          \
                                    const ParameterStore<T>&, FfmCache<T>*);                      \
  template void ffm_backward<T>(const FfmCache<T>&, const Tensor<T>&, const FfmLayer&,            \
                                ParameterStore<T>&);                                              \
  template ParameterStore<T> ResidualNet::make_parameters<T>(std::uint64_t) const;                \
  template void ResidualNet::check_parameters<T>(const ParameterStore<T>&) const;                 \
  template ResidualOutput<T> ResidualNet::forward<T>(const NetInputs<T>&,                         \
                                                     const ParameterStore<T>&, NetTape<T>*) const; \
  template void ResidualNet::backward<T>(const NetTape<T>&, const Raster<T>&, ParameterStore<T>&) \
      const;

PRO_INSTANTIATE_NET(float)
PRO_INSTANTIATE_NET(double)

#undef PRO_INSTANTIATE_NET

template void ResidualNet::build<float>(ParameterStore<float>&);
template void ResidualNet::build<double>(ParameterStore<double>&);

}  // namespace pro::fusion
