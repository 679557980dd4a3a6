#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pro/core/raster.hpp"
#include "pro/tiling/tiling.hpp"

namespace pro::metrics {

inline constexpr double kGtFloor = 1e-3;

struct MetricReport {
  std::optional<double> absrel;
  std::optional<double> delta1;
  std::optional<double> d3r;
  std::optional<double> br;
  std::optional<double> ce;
  std::size_t pixel_count = 0;
};

struct Alignment {
  double scale = 1.0;
  double shift = 0.0;
};

// Closed-form least squares for s * pred + t ~ gt over the valid pixels.
Alignment fit_scale_shift(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid);
DepthMap align_scale_shift(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid);

// gt is clamped to kGtFloor before the ratio.
double absrel(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid);
double delta1(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid);

// Block-pair discontinuity disagreement ratio. Both maps are min-max
// normalized, averaged over cell x cell blocks (remainder dropped), and every
// 4-adjacent block pair whose gt means differ by more than disc_threshold is
// checked: it counts as violated if the prediction reverses the sign of the
// difference or its |difference| is below disc_threshold / 2.
double d3r(const DepthMap& pred, const DepthMap& gt, int cell = 8, double disc_threshold = 0.1);

// Fraction of gt edge pixels with a predicted edge within Chebyshev distance tol.
double boundary_recall(const BinaryMask& pred_edges, const BinaryMask& gt_edges, int tol = 2);

// Mean over the group's overlap regions of the RMS difference between the two
// predictions on that region. The four predictions (each sized like its
// patch) are min-max normalized jointly, with one min and max over the group.
double consistency_error(const std::array<DepthMap, 4>& preds, const tiling::OverlapGroup& group);

// Produces the refined depth for patch `index` of the group, at the patch's
// native size in scene pixels. `rect` is in the scene frame.
using PatchRefiner = std::function<DepthMap(int index, const PatchRect& rect)>;
double consistency_error(const PatchRefiner& refiner, const tiling::OverlapGroup& group);

struct MetricRow {
  std::string scene_id;
  MetricReport report;
};

// Header plus one row per scene and a final "aggregate" row holding the mean
// of every populated column (pixel_count is summed). Empty cells for unset
// metrics.
void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);
MetricReport aggregate(const std::vector<MetricRow>& rows);

}  // namespace pro::metrics
