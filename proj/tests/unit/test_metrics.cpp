#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pro/core/ops.hpp"
#include "pro/metrics/metrics.hpp"

using namespace pro;
using namespace pro::metrics;
using pro::tiling::make_overlap_group;

namespace {

DepthMap scaled(const DepthMap& m, double a, double b = 0) {
  DepthMap o = m;
  for (auto& v : o.values()) v = static_cast<float>(a * v + b);
  return o;
}

}  // namespace

TEST_CASE("align_scale_shift examples") {
  Rng rng(1);
  const DepthMap gt = oracle::random_map(rng, 16, 16, 1, 5);
  const BinaryMask all(16, 16, 1);
  const DepthMap aligned = align_scale_shift(scaled(gt, 2, 1), gt, all);
  for (std::size_t i = 0; i < gt.size(); ++i) CHECK(aligned[i] == doctest::Approx(gt[i]).epsilon(1e-5));
  const Alignment id = fit_scale_shift(gt, gt, all);
  CHECK(id.scale == doctest::Approx(1.0));
  CHECK(id.shift == doctest::Approx(0.0).epsilon(1e-6));

  CHECK_THROWS_AS(fit_scale_shift(DepthMap(4, 4, 2.0f), gt.values().size() ? DepthMap(4, 4, 1.0f) : gt,
                                  BinaryMask(4, 4, 1)),
                  AlignmentError);
  BinaryMask one(16, 16);
  one(3, 3) = 1;
  CHECK_THROWS_AS(fit_scale_shift(gt, gt, one), AlignmentError);
}

TEST_CASE("align_scale_shift beats random probes") {
  Rng rng(2);
  const DepthMap pred = oracle::random_map(rng, 16, 16, 0, 1), gt = oracle::random_map(rng, 16, 16, 1, 4);
  const BinaryMask m = oracle::random_mask(rng, 16, 16, 0.8);
  const Alignment a = fit_scale_shift(pred, gt, m);
  auto resid = [&](double s, double t) {
    double r = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (m[i]) r += std::pow(s * pred[i] + t - gt[i], 2);
    return r;
  };
  const double best = resid(a.scale, a.shift);
  for (int k = 0; k < 10000; ++k) {
    const double s = a.scale + rng.uniform(-2, 2), t = a.shift + rng.uniform(-2, 2);
    CHECK(best <= resid(s, t) + 1e-9);
  }
}

TEST_CASE("absrel and delta1") {
  Rng rng(3);
  const DepthMap gt = oracle::random_map(rng, 12, 12, 0.5, 5);
  const BinaryMask all(12, 12, 1);
  CHECK(absrel(gt, gt, all) == 0.0);
  CHECK(absrel(scaled(gt, 1.1), gt, all) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(delta1(gt, gt, all) == 1.0);
  CHECK(delta1(scaled(gt, 1.3), gt, all) == 0.0);

  DepthMap half = gt;
  for (std::size_t i = 0; i < half.size(); ++i) half[i] = gt[i] * (i % 2 ? 1.1f : 1.5f);
  CHECK(delta1(half, gt, all) == doctest::Approx(0.5));

  CHECK_THROWS_AS(absrel(gt, gt, BinaryMask(12, 12)), MetricError);
  CHECK_THROWS_AS(delta1(gt, gt, BinaryMask(12, 12)), MetricError);

  for (int t = 0; t < 20; ++t) {
    const DepthMap p = oracle::random_map(rng, 12, 12, -0.2, 5), g = oracle::random_map(rng, 12, 12, 0, 5);
    const BinaryMask m = oracle::random_mask(rng, 12, 12, 0.7);
    CHECK(absrel(p, g, m) == doctest::Approx(oracle::absrel(p, g, m)).epsilon(1e-9));
    CHECK(delta1(p, g, m) == doctest::Approx(oracle::delta1(p, g, m)));
    // Joint scaling.
    CHECK(delta1(scaled(p, 3.0), scaled(g, 3.0), m) == doctest::Approx(delta1(p, g, m)));
  }
}

TEST_CASE("aligned absrel is invariant under affine transforms of the prediction") {
  Rng rng(4);
  const DepthMap gt = oracle::random_map(rng, 16, 16, 1, 5), pred = oracle::random_map(rng, 16, 16, 0, 1);
  const BinaryMask all(16, 16, 1);
  const double base = absrel(align_scale_shift(pred, gt, all), gt, all);
  for (int t = 0; t < 20; ++t) {
    const double a = rng.uniform(0.2, 5), b = rng.uniform(-3, 3);
    CHECK(absrel(align_scale_shift(scaled(pred, a, b), gt, all), gt, all) == doctest::Approx(base).epsilon(1e-5));
  }
}

TEST_CASE("d3r examples") {
  Rng rng(5);
  const DepthMap gt = oracle::random_map(rng, 32, 32, 1, 5);
  CHECK(d3r(gt, gt) == 0.0);

  // Two blocks side by side with a step.
  DepthMap step(8, 16, 1.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 8; x < 16; ++x) step(y, x) = 2.0f;
  CHECK(d3r(DepthMap(8, 16, 1.0f), step) == 1.0);

  // 2x2 blocks: gt steps right in both rows, pred keeps the top one only.
  DepthMap g4(16, 16, 0.0f), p4(16, 16, 0.0f);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) {
      g4(y, x) = 1.0f;
      if (y < 8) p4(y, x) = 1.0f;
    }
  CHECK(d3r(p4, g4) == doctest::Approx(0.5));

  CHECK_THROWS_AS(d3r(DepthMap(8, 8), DepthMap(8, 8)), MetricError);

  for (int t = 0; t < 20; ++t) {
    const DepthMap p = oracle::random_map(rng, 40, 48), g = oracle::random_map(rng, 40, 48);
    CHECK(d3r(p, g, 8, 0.1) == doctest::Approx(oracle::d3r(p, g, 8, 0.1)));
    CHECK(d3r(p, g, 4, 0.05) == doctest::Approx(oracle::d3r(p, g, 4, 0.05)));
    const double a = rng.uniform(0.5, 3), b = rng.uniform(-2, 2);
    CHECK(d3r(scaled(p, a, b), scaled(g, a, b), 4, 0.05) == doctest::Approx(d3r(p, g, 4, 0.05)));
  }
}

TEST_CASE("boundary_recall") {
  Rng rng(6);
  const BinaryMask e = oracle::random_mask(rng, 20, 20, 0.1);
  CHECK(boundary_recall(e, e) == 1.0);
  CHECK(boundary_recall(BinaryMask(20, 20), e) == 0.0);

  BinaryMask g(20, 20), p(20, 20);
  for (int y = 0; y < 20; ++y) {
    g(y, 10) = 1;
    p(y, 13) = 1;
  }
  CHECK(boundary_recall(p, g, 2) == 0.0);
  CHECK(boundary_recall(p, g, 3) == 1.0);
  CHECK_THROWS_AS(boundary_recall(p, BinaryMask(20, 20)), MetricError);

  for (int t = 0; t < 20; ++t) {
    const BinaryMask pe = oracle::random_mask(rng, 24, 24, 0.03), ge = oracle::random_mask(rng, 24, 24, 0.05);
    if (mask_count(ge) == 0) continue;
    double prev = -1;
    for (int tol = 0; tol <= 4; ++tol) {
      const double br = boundary_recall(pe, ge, tol);
      CHECK(br == doctest::Approx(oracle::boundary_recall(pe, ge, tol)));
      CHECK(br >= prev);
      prev = br;
    }
  }
}

TEST_CASE("consistency_error") {
  const auto g = make_overlap_group(PatchRect{0, 0, 12, 12}, 8, 8);
  Rng rng(7);
  const DepthMap scene = oracle::random_map(rng, 12, 12);
  std::array<DepthMap, 4> agree;
  for (int i = 0; i < 4; ++i) agree[i] = crop(scene, g.patches[i]);
  CHECK(consistency_error(agree, g) == doctest::Approx(0.0));

  // Refiner form: each patch read from the same scene.
  CHECK(consistency_error([&](int, const PatchRect& r) { return crop(scene, r); }, g) == doctest::Approx(0.0));

  // Values span exactly [0, 1] in every patch so joint normalization is the
  // identity; B is raised by 0.1 on the A-B overlap only.
  std::array<DepthMap, 4> p;
  for (int i = 0; i < 4; ++i) {
    p[i] = DepthMap(8, 8, 0.5f);
    p[i](0, 0) = 0.0f;
    p[i](7, 7) = 1.0f;
  }
  p[0](0, 0) = 0.5f;  // keep every overlap pixel at 0.5 except where varied
  p[0](7, 7) = 0.5f;
  p[0](2, 2) = 0.0f;
  p[0](3, 3) = 1.0f;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) p[1](y, x) = 0.6f;
  p[1](0, 0) = 0.6f;
  p[1](7, 7) = 1.0f;
  p[1](6, 6) = 0.0f;
  // The remaining pairs must agree on their overlaps.
  const auto ov = tiling::enumerate_overlaps(g);
  REQUIRE(ov.size() == 6);
  double pair_ab = 0;
  {
    double s = 0;
    int n = 0;
    for (int y = 0; y < ov[0].rect.h; ++y)
      for (int x = 0; x < ov[0].rect.w; ++x) {
        const int gy = ov[0].rect.y0 + y, gx = ov[0].rect.x0 + x;
        const double d = p[0](gy - g.patches[0].y0, gx - g.patches[0].x0) - p[1](gy - g.patches[1].y0, gx - g.patches[1].x0);
        s += d * d;
        ++n;
      }
    pair_ab = std::sqrt(s / n);
  }
  CHECK(consistency_error(p, g) == doctest::Approx(oracle::consistency_error(p, g)));
  CHECK(pair_ab > 0.0);

  for (int t = 0; t < 20; ++t) {
    std::array<DepthMap, 4> r;
    for (auto& m : r) m = oracle::random_map(rng, 8, 8, 0, 3);
    const double ce = consistency_error(r, g);
    CHECK(ce == doctest::Approx(oracle::consistency_error(r, g)).epsilon(1e-9));
    const double a = rng.uniform(0.5, 3), b = rng.uniform(-2, 2);
    std::array<DepthMap, 4> s;
    for (int i = 0; i < 4; ++i) s[i] = scaled(r[i], a, b);
    CHECK(consistency_error(s, g) == doctest::Approx(ce).epsilon(1e-5));
  }
  CHECK_THROWS_AS(consistency_error(agree, make_overlap_group(PatchRect{0, 0, 16, 16}, 8, 8)), MetricError);
}

TEST_CASE("consistency_error: a constant offset on one pair contributes its RMS") {
  // Two-patch horizontal geometry (overlap only between A-B and C-D), all
  // patches constant except B which is offset by 0.1 from A. Joint range is
  // set to [0, 1] by two out-of-overlap sentinels.
  const auto g = make_overlap_group(PatchRect{0, 0, 12, 16}, 8, 8);
  const auto ov = tiling::enumerate_overlaps(g);
  REQUIRE(ov.size() == 2);
  std::array<DepthMap, 4> p{DepthMap(8, 8, 0.5f), DepthMap(8, 8, 0.6f), DepthMap(8, 8, 0.5f), DepthMap(8, 8, 0.5f)};
  p[2](7, 0) = 0.0f;  // C's bottom-left pixel is outside every overlap
  p[3](7, 7) = 1.0f;  // D's bottom-right pixel too
  CHECK(consistency_error(p, g) == doctest::Approx((0.1 + 0.0) / 2).epsilon(1e-5));
}

TEST_CASE("metrics csv and aggregate") {
  std::vector<MetricRow> rows(2);
  rows[0].scene_id = "scene_0000";
  rows[0].report.absrel = 0.1;
  rows[0].report.ce = 0.2;
  rows[0].report.pixel_count = 100;
  rows[1].scene_id = "scene_0001";
  rows[1].report.absrel = 0.3;
  rows[1].report.pixel_count = 50;
  const MetricReport agg = aggregate(rows);
  REQUIRE(agg.absrel);
  CHECK(*agg.absrel == doctest::Approx(0.2));
  CHECK(agg.pixel_count == 150);
  std::ostringstream os;
  write_metrics_csv(os, rows);
  const std::string s = os.str();
  CHECK(s.rfind("scene_id,absrel,delta1,d3r,br,ce,pixel_count\n", 0) == 0);
  CHECK(s.find("scene_0000,0.1,,,,0.2,100") != std::string::npos);
  CHECK(s.find("aggregate,") != std::string::npos);
}
