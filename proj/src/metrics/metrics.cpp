#include "pro/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pro::metrics {
namespace {

void require_same(const DepthMap& a, const DepthMap& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeError(std::string(what) + ": prediction and ground truth differ in shape");
}

void require_mask(const DepthMap& a, const BinaryMask& m, const char* what) {
  if (a.height() != m.height() || a.width() != m.width())
    throw ShapeError(std::string(what) + ": mask shape differs from the depth map");
}

// Exact min-max normalization (no epsilon) so that positive affine maps of the
// input leave the result unchanged; a constant input maps to zeros.
std::vector<double> normalized(const DepthMap& m) {
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double mn = *lo;
  const double range = static_cast<double>(*hi) - mn;
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = range > 0 ? (m[i] - mn) / range : 0.0;
  return out;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

}  // namespace

Alignment fit_scale_shift(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid) {
  require_same(pred, gt, "align_scale_shift");
  require_mask(pred, valid, "align_scale_shift");
  double n = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (valid[i]) {
      n += 1;
      sp += pred[i];
      sg += gt[i];
    }
  if (n < 2) throw AlignmentError("scale-shift alignment needs at least 2 valid pixels");
  const double mp = sp / n;
  const double mg = sg / n;
  double var = 0, cov = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (valid[i]) {
      const double dp = pred[i] - mp;
      var += dp * dp;
      cov += dp * (gt[i] - mg);
    }
  if (!(var > 0)) throw AlignmentError("scale-shift alignment is degenerate: prediction is constant");
  const double s = cov / var;
  return Alignment{s, mg - s * mp};
}

DepthMap align_scale_shift(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid) {
  const Alignment a = fit_scale_shift(pred, gt, valid);
  DepthMap out = pred;
  for (auto& v : out.values()) v = static_cast<float>(a.scale * v + a.shift);
  return out;
}

double absrel(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid) {
  require_same(pred, gt, "absrel");
  require_mask(pred, valid, "absrel");
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (valid[i]) {
      const double g = std::max<double>(gt[i], kGtFloor);
      sum += std::abs(pred[i] - g) / g;
      ++n;
    }
  if (n == 0) throw MetricError("absrel: empty valid set");
  return sum / static_cast<double>(n);
}

double delta1(const DepthMap& pred, const DepthMap& gt, const BinaryMask& valid) {
  require_same(pred, gt, "delta1");
  require_mask(pred, valid, "delta1");
  std::size_t hits = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (valid[i]) {
      ++n;
      const double g = std::max<double>(gt[i], kGtFloor);
      const double p = pred[i];
      if (p > 0 && std::max(p / g, g / p) < 1.25) ++hits;
    }
  if (n == 0) throw MetricError("delta1: empty valid set");
  return static_cast<double>(hits) / static_cast<double>(n);
}

double d3r(const DepthMap& pred, const DepthMap& gt, int cell, double disc_threshold) {
  require_same(pred, gt, "d3r");
  if (cell < 1) throw MetricError("d3r: cell must be >= 1");
  const int bh = gt.height() / cell;
  const int bw = gt.width() / cell;
  const long pairs = static_cast<long>(bh) * std::max(bw - 1, 0) + static_cast<long>(bw) * std::max(bh - 1, 0);
  if (pairs < 1) throw MetricError("d3r: need at least one pair of adjacent blocks");
  const std::vector<double> np = normalized(pred);
  const std::vector<double> ng = normalized(gt);
  const int w = gt.width();
  auto block_means = [&](const std::vector<double>& v) {
    std::vector<double> m(static_cast<std::size_t>(bh) * bw, 0.0);
    for (int by = 0; by < bh; ++by)
      for (int bx = 0; bx < bw; ++bx) {
        double s = 0;
        for (int y = by * cell; y < (by + 1) * cell; ++y)
          for (int x = bx * cell; x < (bx + 1) * cell; ++x) s += v[static_cast<std::size_t>(y) * w + x];
        m[static_cast<std::size_t>(by) * bw + bx] = s / (static_cast<double>(cell) * cell);
      }
    return m;
  };
  const std::vector<double> mp = block_means(np);
  const std::vector<double> mg = block_means(ng);
  long disc = 0;
  long bad = 0;
  auto check = [&](std::size_t a, std::size_t b) {
    const double dg = mg[b] - mg[a];
    if (std::abs(dg) <= disc_threshold) return;
    ++disc;
    const double dp = mp[b] - mp[a];
    if (dp * dg < 0 || std::abs(dp) < disc_threshold / 2) ++bad;
  };
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      const std::size_t i = static_cast<std::size_t>(by) * bw + bx;
      if (bx + 1 < bw) check(i, i + 1);
      if (by + 1 < bh) check(i, i + bw);
    }
  return disc == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(disc);
}

double boundary_recall(const BinaryMask& pred_edges, const BinaryMask& gt_edges, int tol) {
  if (!pred_edges.same_shape(gt_edges)) throw ShapeError("boundary_recall: mask shapes differ");
  if (tol < 0) throw MetricError("boundary_recall: tol must be >= 0");
  const int h = gt_edges.height();
  const int w = gt_edges.width();
  // Summed-area table of predicted edges for O(1) window queries.
  std::vector<long> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      sat[(y + 1) * (w + 1) + x + 1] = (pred_edges(y, x) ? 1 : 0) + sat[y * (w + 1) + x + 1] +
                                       sat[(y + 1) * (w + 1) + x] - sat[y * (w + 1) + x];
  std::size_t total = 0;
  std::size_t hit = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!gt_edges(y, x)) continue;
      ++total;
      const int y0 = std::max(0, y - tol), y1 = std::min(h, y + tol + 1);
      const int x0 = std::max(0, x - tol), x1 = std::min(w, x + tol + 1);
      const long s = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0] +
                     sat[y0 * (w + 1) + x0];
      if (s > 0) ++hit;
    }
  if (total == 0) throw MetricError("boundary_recall: ground-truth edge set is empty");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double consistency_error(const std::array<DepthMap, 4>& preds, const tiling::OverlapGroup& group) {
  double mn = 0, mx = 0;
  bool first = true;
  for (int i = 0; i < 4; ++i) {
    const PatchRect& p = group.patches[i];
    if (preds[i].height() != p.h || preds[i].width() != p.w)
      throw ShapeError("consistency_error: prediction " + std::to_string(i) +
                       " is not sized like its patch " + to_string(p));
    for (float v : preds[i].values()) {
      if (first || v < mn) mn = v;
      if (first || v > mx) mx = v;
      first = false;
    }
  }
  const double range = mx - mn;
  auto norm = [&](float v) { return range > 0 ? (v - mn) / range : 0.0; };
  const auto overlaps = tiling::enumerate_overlaps(group);
  if (overlaps.empty()) throw MetricError("consistency_error: group has no overlaps");
  double total = 0;
  for (const auto& o : overlaps) {
    const int a = static_cast<int>(o.pair.first);
    const int b = static_cast<int>(o.pair.second);
    const PatchRect& pa = group.patches[a];
    const PatchRect& pb = group.patches[b];
    double sq = 0;
    for (int y = o.rect.y0; y < o.rect.y1(); ++y)
      for (int x = o.rect.x0; x < o.rect.x1(); ++x) {
        const double d = norm(preds[a](y - pa.y0, x - pa.x0)) - norm(preds[b](y - pb.y0, x - pb.x0));
        sq += d * d;
      }
    total += std::sqrt(sq / static_cast<double>(o.rect.area()));
  }
  return total / static_cast<double>(overlaps.size());
}

double consistency_error(const PatchRefiner& refiner, const tiling::OverlapGroup& group) {
  std::array<DepthMap, 4> preds;
  for (int i = 0; i < 4; ++i) preds[i] = refiner(i, group.patch_in_parent(i));
  return consistency_error(preds, group);
}

MetricReport aggregate(const std::vector<MetricRow>& rows) {
  MetricReport agg;
  auto mean_of = [&](auto field) -> std::optional<double> {
    double s = 0;
    int n = 0;
    for (const auto& r : rows)
      if (const auto& v = r.report.*field) {
        s += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return s / n;
  };
  agg.absrel = mean_of(&MetricReport::absrel);
  agg.delta1 = mean_of(&MetricReport::delta1);
  agg.d3r = mean_of(&MetricReport::d3r);
  agg.br = mean_of(&MetricReport::br);
  agg.ce = mean_of(&MetricReport::ce);
  for (const auto& r : rows) agg.pixel_count += r.report.pixel_count;
  return agg;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  auto line = [&](const std::string& id, const MetricReport& m) {
    os << id << ',' << fmt(m.absrel) << ',' << fmt(m.delta1) << ',' << fmt(m.d3r) << ','
       << fmt(m.br) << ',' << fmt(m.ce) << ',' << m.pixel_count << '\n';
  };
  os << "scene_id,absrel,delta1,d3r,br,ce,pixel_count\n";
  for (const auto& r : rows) line(r.scene_id, r.report);
  line("aggregate", aggregate(rows));
}

}  // namespace pro::metrics
