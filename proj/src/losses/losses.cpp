#include "pro/losses/losses.hpp"

#include <cmath>

namespace pro::losses {

void LossConfig::validate() const {
  if (lambda_con < 0 || w_l1 < 0 || w_l2 < 0 || w_msg < 0)
    throw ConfigError("loss weights must be non-negative");
  if (msg_scales < 1) throw ConfigError("loss.msg_scales must be >= 1");
}

void LossValue::add(std::string name, double weight, double raw_value) {
  value += weight * raw_value;
  terms.push_back(LossTerm{std::move(name), weight, raw_value});
}

double LossValue::raw(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return t.raw;
  return 0.0;
}

namespace {

inline double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Gradient-matching term at one scale. Accumulates d term / d r into g.
double gradient_term(const Raster<double>& r, const BinaryMask& m, Raster<double>& g) {
  const int h = r.height();
  const int w = r.width();
  std::size_t n = 0;
  for (auto v : m.values()) n += v ? 1 : 0;
  if (n == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m(y, x)) continue;
      if (x + 1 < w && m(y, x + 1)) {
        const double d = r(y, x + 1) - r(y, x);
        sum += std::abs(d);
        const double s = sgn(d) * inv;
        g(y, x + 1) += s;
        g(y, x) -= s;
      }
      if (y + 1 < h && m(y + 1, x)) {
        const double d = r(y + 1, x) - r(y, x);
        sum += std::abs(d);
        const double s = sgn(d) * inv;
        g(y + 1, x) += s;
        g(y, x) -= s;
      }
    }
  return sum * inv;
}

Raster<double> down2_mean(const Raster<double>& r) {
  Raster<double> out(r.height() / 2, r.width() / 2);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      out(y, x) = 0.25 * (r(2 * y, 2 * x) + r(2 * y, 2 * x + 1) + r(2 * y + 1, 2 * x) +
                          r(2 * y + 1, 2 * x + 1));
  return out;
}

BinaryMask down2_and(const BinaryMask& m) {
  BinaryMask out(m.height() / 2, m.width() / 2);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      out(y, x) = (m(2 * y, 2 * x) && m(2 * y, 2 * x + 1) && m(2 * y + 1, 2 * x) &&
                   m(2 * y + 1, 2 * x + 1))
                      ? 1
                      : 0;
  return out;
}

}  // namespace

template <typename T>
GroupLossWithGrad<T> consistency_loss(const std::array<Raster<T>, 4>& preds,
                                      const tiling::OverlapGroup& group,
                                      const std::vector<tiling::OverlapRegion>& overlaps) {
  GroupLossWithGrad<T> out;
  std::array<Raster<double>, 4> grads;
  for (int i = 0; i < 4; ++i) {
    const PatchRect& p = group.patches[i];
    if (preds[i].height() != p.h || preds[i].width() != p.w)
      throw ShapeError("consistency_loss: prediction " +
                       std::string(1, tiling::patch_label(tiling::PatchId(i))) +
                       " does not match its patch " + to_string(p));
    grads[i] = Raster<double>(p.h, p.w, 0.0);
  }
  double total = 0.0;
  for (const auto& ov : overlaps) {
    const int a = static_cast<int>(ov.pair.first);
    const int b = static_cast<int>(ov.pair.second);
    const PatchRect& pa = group.patches[a];
    const PatchRect& pb = group.patches[b];
    const double inv = 1.0 / static_cast<double>(ov.rect.area());
    double sum = 0.0;
    for (int y = ov.rect.y0; y < ov.rect.y1(); ++y)
      for (int x = ov.rect.x0; x < ov.rect.x1(); ++x) {
        const double d = static_cast<double>(preds[a](y - pa.y0, x - pa.x0)) -
                         static_cast<double>(preds[b](y - pb.y0, x - pb.x0));
        sum += d * d;
        grads[a](y - pa.y0, x - pa.x0) += 2.0 * d * inv;
        grads[b](y - pb.y0, x - pb.x0) -= 2.0 * d * inv;
      }
    total += sum * inv;
  }
  out.loss.add("con", 1.0, total);
  for (int i = 0; i < 4; ++i) out.grads[i] = raster_cast<T>(grads[i]);
  return out;
}

template <typename T>
LossWithGrad<T> composite_loss(const Raster<T>& pred, const Raster<T>& gt, const BinaryMask& mask,
                               const LossConfig& cfg) {
  if (!pred.same_shape(gt) || !pred.same_shape(mask))
    throw ShapeError("composite_loss: pred, gt and mask dimensions differ");
  const int h = pred.height();
  const int w = pred.width();
  Raster<double> r(h, w);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);

  Raster<double> grad(h, w, 0.0);
  std::size_t n = 0;
  for (auto v : mask.values()) n += v ? 1 : 0;

  double l1 = 0.0;
  double l2 = 0.0;
  if (n > 0) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!mask[i]) continue;
      l1 += std::abs(r[i]);
      l2 += r[i] * r[i];
      grad[i] += (cfg.w_l1 * sgn(r[i]) + cfg.w_l2 * 2.0 * r[i]) * inv;
    }
    l1 *= inv;
    l2 *= inv;
  }

  // Residual pyramid, then backward from the coarsest scale so each level's
  // gradient is pushed through the 2x2 mean into the level above.
  std::vector<Raster<double>> res{r};
  std::vector<BinaryMask> masks{mask};
  for (int k = 1; k < cfg.msg_scales; ++k) {
    if (res.back().height() < 2 || res.back().width() < 2) break;
    res.push_back(down2_mean(res.back()));
    masks.push_back(down2_and(masks.back()));
  }
  double msg = 0.0;
  std::vector<Raster<double>> g(res.size());
  for (std::size_t k = 0; k < res.size(); ++k) {
    g[k] = Raster<double>(res[k].height(), res[k].width(), 0.0);
    msg += gradient_term(res[k], masks[k], g[k]);
  }
  for (std::size_t k = res.size() - 1; k > 0; --k) {
    Raster<double>& fine = g[k - 1];
    const Raster<double>& coarse = g[k];
    for (int y = 0; y < coarse.height(); ++y)
      for (int x = 0; x < coarse.width(); ++x) {
        const double v = 0.25 * coarse(y, x);
        fine(2 * y, 2 * x) += v;
        fine(2 * y, 2 * x + 1) += v;
        fine(2 * y + 1, 2 * x) += v;
        fine(2 * y + 1, 2 * x + 1) += v;
      }
  }
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.w_msg * g[0][i];

  LossWithGrad<T> out;
  out.loss.add("l1", cfg.w_l1, l1);
  out.loss.add("l2", cfg.w_l2, l2);
  out.loss.add("msg", cfg.w_msg, msg);
  out.grad = raster_cast<T>(grad);
  return out;
}

template <typename T>
LossWithGrad<T> masked_loss(const Raster<T>& d_merged, const Raster<T>& d_gt,
                            const BinaryMask& m_bfm, const LossConfig& cfg) {
  return composite_loss(d_merged, d_gt, m_bfm, cfg);
}

LossValue final_loss(const LossValue& masked, const LossValue& con, const LossConfig& cfg) {
  LossValue out;
  for (const auto& t : masked.terms) out.add(t.name, t.weight, t.raw);
  out.add("con", cfg.lambda_con, con.value);
  return out;
}

template GroupLossWithGrad<float> consistency_loss(const std::array<Raster<float>, 4>&,
                                                   const tiling::OverlapGroup&,
                                                   const std::vector<tiling::OverlapRegion>&);
template GroupLossWithGrad<double> consistency_loss(const std::array<Raster<double>, 4>&,
                                                    const tiling::OverlapGroup&,
                                                    const std::vector<tiling::OverlapRegion>&);
template LossWithGrad<float> composite_loss(const Raster<float>&, const Raster<float>&,
                                            const BinaryMask&, const LossConfig&);
template LossWithGrad<double> composite_loss(const Raster<double>&, const Raster<double>&,
                                             const BinaryMask&, const LossConfig&);
template LossWithGrad<float> masked_loss(const Raster<float>&, const Raster<float>&,
                                         const BinaryMask&, const LossConfig&);
template LossWithGrad<double> masked_loss(const Raster<double>&, const Raster<double>&,
                                          const BinaryMask&, const LossConfig&);

}  // namespace pro::losses
