#pragma once

#include <array>
#include <string>
#include <vector>

#include "pro/core/raster.hpp"
#include "pro/tiling/tiling.hpp"

namespace pro::losses {

struct LossConfig {
  double lambda_con = 4.0;
  double w_l1 = 1.0;
  double w_l2 = 1.0;
  double w_msg = 5.0;
  int msg_scales = 4;

  void validate() const;
};

// One named contribution; the loss value is the sum of weight * raw.
struct LossTerm {
  std::string name;
  double weight = 1.0;
  double raw = 0.0;
};

struct LossValue {
  double value = 0.0;
  std::vector<LossTerm> terms;

  void add(std::string name, double weight, double raw);
  // Raw (unweighted) value of a term; 0 when absent.
  double raw(const std::string& name) const;
};

template <typename T>
struct LossWithGrad {
  LossValue loss;
  Raster<T> grad;  // d value / d prediction
};

template <typename T>
struct GroupLossWithGrad {
  LossValue loss;
  std::array<Raster<T>, 4> grads;
};

// Sum over the given overlap regions of the mean squared difference between
// the two member predictions. Predictions are in their patch's local frame.
template <typename T>
GroupLossWithGrad<T> consistency_loss(const std::array<Raster<T>, 4>& preds,
                                      const tiling::OverlapGroup& group,
                                      const std::vector<tiling::OverlapRegion>& overlaps);

// w_l1 * L1 + w_l2 * L2 + w_msg * L_msg over the valid pixels of `mask`.
// L_msg sums, over msg_scales factor-2 residual pyramids (2x2 mean for the
// residual, 2x2 AND for the mask), the sum of |dx r| + |dy r| over forward
// differences whose two pixels are both valid, divided by the number of
// valid pixels at that scale. Terms with no valid pixels are 0.
template <typename T>
LossWithGrad<T> composite_loss(const Raster<T>& pred, const Raster<T>& gt, const BinaryMask& mask,
                               const LossConfig& cfg);

// composite_loss restricted to the reliable mask.
template <typename T>
LossWithGrad<T> masked_loss(const Raster<T>& d_merged, const Raster<T>& d_gt,
                            const BinaryMask& m_bfm, const LossConfig& cfg);

// masked + lambda_con * con, keeping both breakdowns.
LossValue final_loss(const LossValue& masked, const LossValue& con, const LossConfig& cfg);

}  // namespace pro::losses
