#pragma once

#include <array>
#include <utility>
#include <vector>

#include "pro/core/raster.hpp"

namespace pro::tiling {

struct GridSpec {
  int rows = 4;
  int cols = 4;
};

// Patch ids inside a 2x2 training group.
enum class PatchId : int { A = 0, B = 1, C = 2, D = 3 };
char patch_label(PatchId id);

// Four overlapping patches tiling a training crop: A top-left, B top-right,
// C bottom-left, D bottom-right. Patch rects are in the crop's own frame
// (the crop's top-left is the origin); `region` keeps its parent position.
struct OverlapGroup {
  PatchRect region;
  std::array<PatchRect, 4> patches;
  int overlap_w = 0;
  int overlap_h = 0;

  const PatchRect& patch(PatchId id) const { return patches[static_cast<int>(id)]; }
  // Patch rect translated into the region's parent frame.
  PatchRect patch_in_parent(int i) const {
    const PatchRect& p = patches[i];
    return PatchRect{region.x0 + p.x0, region.y0 + p.y0, p.w, p.h};
  }
};

struct OverlapRegion {
  std::pair<PatchId, PatchId> pair;
  PatchRect rect;  // in region coordinates
};

// rows x cols non-overlapping cells; the last row/column absorbs the
// remainder of a non-divisible size. Row-major order.
std::vector<PatchRect> partition_grid(int img_w, int img_h, const GridSpec& grid);

// patch_w <= region.w <= 2 * patch_w (same for heights).
OverlapGroup make_overlap_group(const PatchRect& region, int patch_w, int patch_h);

// Unordered pairs with a nonempty intersection, in (A,B), (A,C), (A,D),
// (B,C), (B,D), (C,D) order.
std::vector<OverlapRegion> enumerate_overlaps(const OverlapGroup& group);

// Number of patches covering each pixel of the region.
Raster<int> coverage_counts(const OverlapGroup& group);

struct PlacedDepth {
  PatchRect rect;
  DepthMap depth;
};

// Pixel-wise mean of every patch that covers it. Sums and counts are kept
// separately so contributions may be accumulated in any order.
class DepthAccumulator {
 public:
  DepthAccumulator(int canvas_w, int canvas_h);
  void add(const PatchRect& rect, const DepthMap& depth);
  DepthMap resolve() const;

 private:
  int width_;
  int height_;
  std::vector<double> sum_;
  std::vector<int> count_;
};

DepthMap merge_depths(const std::vector<PlacedDepth>& patches, int canvas_w, int canvas_h);

// Differentiable merge of a group's four patch predictions over its region
// (each prediction sized like its patch), and the matching adjoint that
// routes a region gradient back to every patch through the 1/N_o weights.
template <typename T>
Raster<T> merge_group(const std::array<Raster<T>, 4>& preds, const OverlapGroup& group);
template <typename T>
std::array<Raster<T>, 4> merge_group_adjoint(const Raster<T>& grad_merged, const OverlapGroup& group);

// Each refined working-resolution patch is resized to its grid cell, placed
// on an image-sized canvas, and the canvas is resized to (out_w, out_h).
DepthMap reassemble_inference(int img_w, int img_h, const GridSpec& grid,
                              const std::vector<DepthMap>& refined);
DepthMap reassemble_inference(int img_w, int img_h, const GridSpec& grid,
                              const std::vector<DepthMap>& refined, int out_w, int out_h);

}  // namespace pro::tiling
