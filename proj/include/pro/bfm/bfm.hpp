#pragma once

#include "pro/core/raster.hpp"

namespace pro::bfm {

struct BfmConfig {
  double tau = 2.0;                  // ratio threshold of the unreliable test
  int dilate_kh = 10;                // dilation kernel rows
  int dilate_kw = 20;                // dilation kernel columns
  double edge_grad_threshold = 0.05; // Sobel magnitude, fraction of normalized range
  double discard_threshold = 0.5;    // max tolerated unreliable fraction

  void validate() const;
};

// [max(N(c)/N(g), N(g)/N(c)) > tau] with N the eps-guarded min-max
// normalization; each denominator is clamped below at eps.
BinaryMask unreliable_mask(const DepthMap& d_coarse, const DepthMap& d_gt, const BfmConfig& cfg);

// Sobel gradient magnitude of the normalized map, scaled so a unit-slope
// ramp has magnitude 1, thresholded at cfg.edge_grad_threshold.
BinaryMask edge_map(const DepthMap& d, const BfmConfig& cfg);

// Binary dilation by a kh x kw all-ones element. The anchor sits at
// ((kh-1)/2, (kw-1)/2), so even kernels extend one pixel further toward the
// top-left. Pixels outside the raster count as false.
BinaryMask dilate(const BinaryMask& mask, int kh, int kw);

struct BfmMasks {
  BinaryMask unreliable;
  BinaryMask edges_coarse;  // dilated
  BinaryMask edges_gt;      // dilated
  BinaryMask edge;          // edges_coarse AND edges_gt
  BinaryMask reliable;      // edge OR NOT unreliable
};

BfmMasks compute_masks(const DepthMap& d_coarse, const DepthMap& d_gt, const BfmConfig& cfg);
BinaryMask bfm_mask(const DepthMap& d_coarse, const DepthMap& d_gt, const BfmConfig& cfg);

// True iff the unreliable fraction strictly exceeds cfg.discard_threshold.
bool should_discard_sample(const BinaryMask& m_unreliable, const BfmConfig& cfg);

}  // namespace pro::bfm
