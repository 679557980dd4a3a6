#include "pro/tiling/tiling.hpp"

#include "pro/core/ops.hpp"

namespace pro::tiling {

char patch_label(PatchId id) { return static_cast<char>('A' + static_cast<int>(id)); }

std::vector<PatchRect> partition_grid(int img_w, int img_h, const GridSpec& grid) {
  if (grid.rows < 1 || grid.cols < 1)
    throw GeometryError("grid must have at least one row and one column");
  if (img_w < grid.cols || img_h < grid.rows)
    throw GeometryError("image " + std::to_string(img_w) + "x" + std::to_string(img_h) +
                        " is smaller than grid " + std::to_string(grid.rows) + "x" +
                        std::to_string(grid.cols));
  const int cell_w = img_w / grid.cols;
  const int cell_h = img_h / grid.rows;
  std::vector<PatchRect> rects;
  rects.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    const int y0 = r * cell_h;
    const int h = (r == grid.rows - 1) ? img_h - y0 : cell_h;
    for (int c = 0; c < grid.cols; ++c) {
      const int x0 = c * cell_w;
      const int w = (c == grid.cols - 1) ? img_w - x0 : cell_w;
      rects.push_back(PatchRect{x0, y0, w, h});
    }
  }
  return rects;
}

OverlapGroup make_overlap_group(const PatchRect& region, int patch_w, int patch_h) {
  if (patch_w < 1 || patch_h < 1) throw GeometryError("patch dimensions must be positive");
  if (region.w < patch_w || region.w > 2 * patch_w)
    throw GeometryError("region width " + std::to_string(region.w) + " not in [patch_w, 2*patch_w] for patch_w=" +
                        std::to_string(patch_w));
  if (region.h < patch_h || region.h > 2 * patch_h)
    throw GeometryError("region height " + std::to_string(region.h) + " not in [patch_h, 2*patch_h] for patch_h=" +
                        std::to_string(patch_h));
  OverlapGroup g;
  g.region = region;
  g.overlap_w = 2 * patch_w - region.w;
  g.overlap_h = 2 * patch_h - region.h;
  const int right = region.w - patch_w;
  const int bottom = region.h - patch_h;
  g.patches[0] = PatchRect{0, 0, patch_w, patch_h};
  g.patches[1] = PatchRect{right, 0, patch_w, patch_h};
  g.patches[2] = PatchRect{0, bottom, patch_w, patch_h};
  g.patches[3] = PatchRect{right, bottom, patch_w, patch_h};
  return g;
}

std::vector<OverlapRegion> enumerate_overlaps(const OverlapGroup& group) {
  std::vector<OverlapRegion> out;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const PatchRect r = intersect(group.patches[i], group.patches[j]);
      if (!r.empty())
        out.push_back(OverlapRegion{{static_cast<PatchId>(i), static_cast<PatchId>(j)}, r});
    }
  return out;
}

Raster<int> coverage_counts(const OverlapGroup& group) {
  Raster<int> counts(group.region.h, group.region.w, 0);
  for (const PatchRect& p : group.patches)
    for (int y = p.y0; y < p.y1(); ++y)
      for (int x = p.x0; x < p.x1(); ++x) ++counts(y, x);
  return counts;
}

DepthAccumulator::DepthAccumulator(int canvas_w, int canvas_h)
    : width_(canvas_w), height_(canvas_h) {
  if (canvas_w < 1 || canvas_h < 1) throw ShapeError("canvas must be at least 1x1");
  sum_.assign(static_cast<std::size_t>(canvas_w) * canvas_h, 0.0);
  count_.assign(sum_.size(), 0);
}

void DepthAccumulator::add(const PatchRect& rect, const DepthMap& depth) {
  if (depth.height() != rect.h || depth.width() != rect.w)
    throw ShapeError("patch depth " + std::to_string(depth.width()) + "x" +
                     std::to_string(depth.height()) + " does not match " + to_string(rect));
  if (!rect.within(width_, height_))
    throw BoundsError("patch " + to_string(rect) + " lies outside the canvas");
  for (int y = 0; y < rect.h; ++y) {
    const float* src = depth.row(y);
    const std::size_t base = static_cast<std::size_t>(rect.y0 + y) * width_ + rect.x0;
    for (int x = 0; x < rect.w; ++x) {
      sum_[base + x] += src[x];
      ++count_[base + x];
    }
  }
}

DepthMap DepthAccumulator::resolve() const {
  DepthMap out(height_, width_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
      if (count_[i] == 0)
        throw CoverageError("pixel (x=" + std::to_string(x) + ", y=" + std::to_string(y) +
                            ") is not covered by any patch");
      out[i] = static_cast<float>(count_[i] == 1 ? sum_[i] : sum_[i] / count_[i]);
    }
  return out;
}

DepthMap merge_depths(const std::vector<PlacedDepth>& patches, int canvas_w, int canvas_h) {
  DepthAccumulator acc(canvas_w, canvas_h);
  for (const PlacedDepth& p : patches) acc.add(p.rect, p.depth);
  return acc.resolve();
}

template <typename T>
Raster<T> merge_group(const std::array<Raster<T>, 4>& preds, const OverlapGroup& group) {
  const Raster<int> counts = coverage_counts(group);
  Raster<double> sum(group.region.h, group.region.w, 0.0);
  for (int i = 0; i < 4; ++i) {
    const PatchRect& p = group.patches[i];
    if (preds[i].height() != p.h || preds[i].width() != p.w)
      throw ShapeError("merge_group: prediction " + std::string(1, patch_label(PatchId(i))) +
                       " does not match " + to_string(p));
    for (int y = 0; y < p.h; ++y)
      for (int x = 0; x < p.w; ++x) sum(p.y0 + y, p.x0 + x) += preds[i](y, x);
  }
  Raster<T> out(group.region.h, group.region.w);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (counts[i] == 0)
      throw CoverageError("merge_group: region pixel " + std::to_string(i) + " is uncovered");
    out[i] = static_cast<T>(counts[i] == 1 ? sum[i] : sum[i] / counts[i]);
  }
  return out;
}

template <typename T>
std::array<Raster<T>, 4> merge_group_adjoint(const Raster<T>& grad_merged, const OverlapGroup& group) {
  if (grad_merged.height() != group.region.h || grad_merged.width() != group.region.w)
    throw ShapeError("merge_group_adjoint: gradient does not match the group region");
  const Raster<int> counts = coverage_counts(group);
  std::array<Raster<T>, 4> out;
  for (int i = 0; i < 4; ++i) {
    const PatchRect& p = group.patches[i];
    out[i] = Raster<T>(p.h, p.w);
    for (int y = 0; y < p.h; ++y)
      for (int x = 0; x < p.w; ++x)
        out[i](y, x) = grad_merged(p.y0 + y, p.x0 + x) / static_cast<T>(counts(p.y0 + y, p.x0 + x));
  }
  return out;
}

template Raster<float> merge_group(const std::array<Raster<float>, 4>&, const OverlapGroup&);
template Raster<double> merge_group(const std::array<Raster<double>, 4>&, const OverlapGroup&);
template std::array<Raster<float>, 4> merge_group_adjoint(const Raster<float>&, const OverlapGroup&);
template std::array<Raster<double>, 4> merge_group_adjoint(const Raster<double>&, const OverlapGroup&);

DepthMap reassemble_inference(int img_w, int img_h, const GridSpec& grid,
                              const std::vector<DepthMap>& refined) {
  return reassemble_inference(img_w, img_h, grid, refined, img_w, img_h);
}

DepthMap reassemble_inference(int img_w, int img_h, const GridSpec& grid,
                              const std::vector<DepthMap>& refined, int out_w, int out_h) {
  const auto cells = partition_grid(img_w, img_h, grid);
  if (refined.size() != cells.size())
    throw ArityError("expected " + std::to_string(cells.size()) + " refined patches, got " +
                     std::to_string(refined.size()));
  DepthAccumulator acc(img_w, img_h);
  for (std::size_t i = 0; i < cells.size(); ++i)
    acc.add(cells[i], resize_bilinear(refined[i], cells[i].h, cells[i].w));
  return resize_bilinear(acc.resolve(), out_h, out_w);
}

}  // namespace pro::tiling
