#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pro/core/raster.hpp"
#include "pro/fusion/layers.hpp"
#include "pro/fusion/params.hpp"

namespace pro::fusion {

struct NetConfig {
  int base_channels = 16;
  int levels = 5;  // fixed: mirrors the five-level feature pyramids
  int patch_res = 128;

  // Level j of every pyramid is patch_res / 2^(j+1) on a side, and the
  // coarsest level must still split into Haar blocks, so patch_res must be
  // a multiple of 2^(levels+1).
  void validate() const;
  int level_size(int j) const { return patch_res >> (j + 1); }
};

// Frequency fusion: Haar-decompose both inputs, fuse each sub-band pair with
// its own 3x3 convolution + leaky rectification, recompose.
struct FfmLayer {
  std::array<Conv2d, 4> band;

  template <typename T>
  static FfmLayer create(ParameterStore<T>& params, const std::string& name, int channels);
};

template <typename T>
struct FfmCache {
  std::array<Tensor<T>, 4> inputs;   // concat(X_c, X_f) per band
  std::array<Tensor<T>, 4> outputs;  // fused band after rectification
};

template <typename T>
Tensor<T> ffm_forward(const Tensor<T>& f_coarse_roi, const Tensor<T>& f_fine, const FfmLayer& layer,
                      const ParameterStore<T>& params, FfmCache<T>* cache = nullptr);

// Parameter gradients only: both FFM inputs come from the frozen backbone.
template <typename T>
void ffm_backward(const FfmCache<T>& cache, const Tensor<T>& grad_out, const FfmLayer& layer,
                  ParameterStore<T>& params);

// Everything the residual network consumes for one patch, already at the
// working resolution.
template <typename T>
struct NetInputs {
  Tensor<T> rgb;                          // 3 x R x R
  Raster<T> coarse_roi;                   // R x R
  Raster<T> fine;                         // R x R
  std::vector<Tensor<T>> coarse_features; // 5 levels, C x R/2^(j+1)
  std::vector<Tensor<T>> fine_features;   // 5 levels, C x R/2^(j+1)
};

template <typename T>
struct NetTape {
  Tensor<T> x0;
  std::array<Tensor<T>, 5> enc;
  std::array<FfmCache<T>, 5> ffm;
  std::array<Tensor<T>, 5> red_in;
  std::array<Tensor<T>, 5> red_a;
  std::array<Tensor<T>, 5> red_b;
  std::array<Tensor<T>, 5> dec_in;
  std::array<Tensor<T>, 5> dec_out;
};

template <typename T>
struct ResidualOutput {
  Raster<T> residual;               // R x R
  std::array<Tensor<T>, 5> encoder; // F_enc
};

// Residual prediction network:
//   encoder  5 x (3x3 stride-2 conv, leaky) over concat(rgb, coarse, fine)
//   fusion   per level: FFM(coarse feats, fine feats), then
//            concat(fused, coarse feats, encoder) -> two (3x3 conv, leaky)
//   decoder  5 x (2x nearest upsample, concat skip, 3x3 conv, leaky); the
//            skips are the reduced features and, at full resolution, the input
//   head     1x1 conv to one channel, zero-initialized
class ResidualNet {
 public:
  explicit ResidualNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }

  // Fresh parameters: fan-in scaled normal init from `seed`, zero head.
  template <typename T>
  ParameterStore<T> make_parameters(std::uint64_t seed) const;

  // Throws VersionError if the store does not match this architecture.
  template <typename T>
  void check_parameters(const ParameterStore<T>& params) const;

  template <typename T>
  ResidualOutput<T> forward(const NetInputs<T>& in, const ParameterStore<T>& params,
                            NetTape<T>* tape = nullptr) const;

  // Accumulates d loss / d params given d loss / d residual.
  template <typename T>
  void backward(const NetTape<T>& tape, const Raster<T>& grad_residual,
                ParameterStore<T>& params) const;

 private:
  template <typename T>
  void build(ParameterStore<T>& params);

  NetConfig cfg_;
  std::array<Conv2d, 5> enc_;
  std::array<FfmLayer, 5> ffm_;
  std::array<Conv2d, 5> red_a_;
  std::array<Conv2d, 5> red_b_;
  std::array<Conv2d, 5> dec_;
  Conv2d head_;
  ParameterStore<float> layout_;
};

struct ResidualResult {
  DepthMap residual;
  FeaturePyramid encoder;
};

// Single-patch convenience wrapper around ResidualNet::forward.
ResidualResult residual_forward(const RgbImage& patch_rgb, const DepthMap& d_coarse_roi,
                                const DepthMap& d_fine, const FeaturePyramid& f_c_roi,
                                const FeaturePyramid& f_f, const ParameterStore<float>& params,
                                const NetConfig& cfg);

// D_refine = coarse ROI + R.
template <typename T>
Raster<T> refine_patch(const Raster<T>& d_coarse_roi, const Raster<T>& residual);

}  // namespace pro::fusion
