#include "pro/bfm/bfm.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pro/core/ops.hpp"

namespace pro::bfm {

void BfmConfig::validate() const {
  if (!(tau > 1.0)) throw ConfigError("bfm.tau must be > 1");
  if (dilate_kh < 1 || dilate_kw < 1) throw ConfigError("bfm dilation kernel must be at least 1x1");
  if (!(discard_threshold > 0.0 && discard_threshold <= 1.0))
    throw ConfigError("bfm.discard_threshold must be in (0, 1]");
  if (edge_grad_threshold < 0.0) throw ConfigError("bfm.edge_grad_threshold must be >= 0");
}

BinaryMask unreliable_mask(const DepthMap& d_coarse, const DepthMap& d_gt, const BfmConfig& cfg) {
  if (!d_coarse.same_shape(d_gt))
    throw ShapeError("unreliable_mask: coarse " + std::to_string(d_coarse.width()) + "x" +
                     std::to_string(d_coarse.height()) + " vs gt " + std::to_string(d_gt.width()) +
                     "x" + std::to_string(d_gt.height()));
  const Raster<double> nc = minmax_normalize(raster_cast<double>(d_coarse));
  const Raster<double> ng = minmax_normalize(raster_cast<double>(d_gt));
  BinaryMask out(d_coarse.height(), d_coarse.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double c = nc[i];
    const double g = ng[i];
    const double ratio = std::max(c / std::max(g, kNormEps), g / std::max(c, kNormEps));
    out[i] = ratio > cfg.tau ? 1 : 0;
  }
  return out;
}

BinaryMask edge_map(const DepthMap& d, const BfmConfig& cfg) {
  const Raster<double> n = minmax_normalize(raster_cast<double>(d));
  const int h = n.height();
  const int w = n.width();
  auto at = [&](int y, int x) { return n(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
  BinaryMask out(h, w);
  const double thr2 = cfg.edge_grad_threshold * cfg.edge_grad_threshold;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1) - at(y - 1, x - 1) -
                         2 * at(y, x - 1) - at(y + 1, x - 1)) / 8.0;
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1) - at(y - 1, x - 1) -
                         2 * at(y - 1, x) - at(y - 1, x + 1)) / 8.0;
      out(y, x) = (gx * gx + gy * gy > thr2) ? 1 : 0;
    }
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int kh, int kw) {
  if (kh < 1 || kw < 1) throw ShapeError("dilate: kernel must be at least 1x1");
  const int h = mask.height();
  const int w = mask.width();
  const int ay = (kh - 1) / 2;
  const int ax = (kw - 1) / 2;
  // out(y, x) = OR of in(y + dy, x + dx), dy in [-ay, kh-1-ay], dx likewise.
  BinaryMask rows(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - ax);
      const int hi = std::min(w - 1, x + kw - 1 - ax);
      std::uint8_t v = 0;
      for (int k = lo; k <= hi && !v; ++k) v = mask(y, k);
      rows(y, x) = v ? 1 : 0;
    }
  BinaryMask out(h, w);
  for (int y = 0; y < h; ++y) {
    const int lo = std::max(0, y - ay);
    const int hi = std::min(h - 1, y + kh - 1 - ay);
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int k = lo; k <= hi && !v; ++k) v = rows(k, x);
      out(y, x) = v ? 1 : 0;
    }
  }
  return out;
}

BfmMasks compute_masks(const DepthMap& d_coarse, const DepthMap& d_gt, const BfmConfig& cfg) {
  BfmMasks m;
  m.unreliable = unreliable_mask(d_coarse, d_gt, cfg);
  m.edges_coarse = dilate(edge_map(d_coarse, cfg), cfg.dilate_kh, cfg.dilate_kw);
  m.edges_gt = dilate(edge_map(d_gt, cfg), cfg.dilate_kh, cfg.dilate_kw);
  m.edge = mask_and(m.edges_coarse, m.edges_gt);
  m.reliable = mask_or(m.edge, mask_not(m.unreliable));
  return m;
}

BinaryMask bfm_mask(const DepthMap& d_coarse, const DepthMap& d_gt, const BfmConfig& cfg) {
  return compute_masks(d_coarse, d_gt, cfg).reliable;
}

bool should_discard_sample(const BinaryMask& m_unreliable, const BfmConfig& cfg) {
  if (m_unreliable.empty()) throw ShapeError("should_discard_sample: empty mask");
  // count > t * n rather than count / n > t: no rounding at the boundary.
  const double count = static_cast<double>(mask_count(m_unreliable));
  return count > cfg.discard_threshold * static_cast<double>(m_unreliable.size());
}

}  // namespace pro::bfm
