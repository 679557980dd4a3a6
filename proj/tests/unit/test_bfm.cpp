#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pro/bfm/bfm.hpp"
#include "pro/core/ops.hpp"

using namespace pro;
using namespace pro::bfm;

TEST_CASE("unreliable_mask examples") {
  const BfmConfig cfg;
  Rng rng(3);
  const DepthMap d = oracle::random_map(rng, 12, 12, 1, 5);
  CHECK(mask_count(unreliable_mask(d, d, cfg)) == 0);

  // Three pixels: the middle has N(c) = 0.9, N(g) = 0.3.
  const DepthMap c(1, 3, std::vector<float>{0.0f, 0.9f, 1.0f});
  const DepthMap g(1, 3, std::vector<float>{0.0f, 0.3f, 1.0f});
  const BinaryMask m = unreliable_mask(c, g, cfg);
  CHECK(m[1] == 1);
  CHECK(m[2] == 0);

  // N(g) = 0 at a pixel where N(c) = 0.5.
  const DepthMap c2(1, 3, std::vector<float>{0.0f, 0.5f, 1.0f});
  const DepthMap g2(1, 3, std::vector<float>{0.5f, 0.0f, 1.0f});
  CHECK(unreliable_mask(c2, g2, cfg)[1] == 1);

  CHECK_THROWS_AS(unreliable_mask(DepthMap(2, 3), DepthMap(3, 2), cfg), ShapeError);
}

TEST_CASE("unreliable_mask equals the per-pixel oracle on random pairs") {
  const BfmConfig cfg;
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    const DepthMap c = oracle::random_map(rng, 16, 16, 0, 3);
    const DepthMap g = oracle::random_map(rng, 16, 16, 1, 2);
    const BinaryMask got = unreliable_mask(c, g, cfg);
    CHECK(got == oracle::unreliable(c, g, cfg.tau));
    CHECK(got == unreliable_mask(g, c, cfg));  // symmetric
  }
}

TEST_CASE("unreliable_mask is nearly affine invariant") {
  const BfmConfig cfg;
  Rng rng(7);
  std::size_t differ = 0, total = 0;
  for (int t = 0; t < 50; ++t) {
    DepthMap c = oracle::random_map(rng, 32, 32, 0, 4);
    const DepthMap g = oracle::random_map(rng, 32, 32, 0, 4);
    c[0] = 0;
    c[1] = 4;
    const double a = rng.uniform(0.5, 2.0), b = rng.uniform(-10, 10);
    DepthMap ct = c;
    for (auto& v : ct.values()) v = static_cast<float>(a * v + b);
    const BinaryMask m1 = unreliable_mask(c, g, cfg), m2 = unreliable_mask(ct, g, cfg);
    for (std::size_t i = 0; i < m1.size(); ++i) differ += m1[i] != m2[i];
    total += m1.size();
  }
  CHECK(static_cast<double>(differ) / total < 0.005);
}

TEST_CASE("edge_map examples") {
  BfmConfig cfg;
  CHECK(mask_count(edge_map(DepthMap(20, 20, 1.0f), cfg)) == 0);

  DepthMap step(20, 20, 0.0f);
  for (int y = 0; y < 20; ++y)
    for (int x = 10; x < 20; ++x) step(y, x) = 1.0f;
  const BinaryMask e = edge_map(step, cfg);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) CHECK(e(y, x) == ((x == 9 || x == 10) ? 1 : 0));

  DepthMap ramp(10, 100);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 100; ++x) ramp(y, x) = x / 99.0f;
  cfg.edge_grad_threshold = 0.1;
  CHECK(mask_count(edge_map(ramp, cfg)) == 0);
}

TEST_CASE("dilate examples and properties") {
  CHECK(mask_count(dilate(BinaryMask(8, 8), 3, 3)) == 0);

  BinaryMask one(7, 7);
  one(3, 3) = 1;
  const BinaryMask d3 = dilate(one, 3, 3);
  CHECK(mask_count(d3) == 9);
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 4; ++x) CHECK(d3(y, x) == 1);

  BinaryMask corner(7, 7);
  corner(0, 0) = 1;
  CHECK(mask_count(dilate(corner, 3, 3)) == 4);

  BinaryMask p(40, 60);
  p(20, 30) = 1;
  const BinaryMask big = dilate(p, 10, 20);
  CHECK(mask_count(big) == 200);
  CHECK(big == oracle::dilate(p, 10, 20));
  // Anchor (4, 9): the block spans rows 15..24, columns 20..39.
  CHECK(big(15, 20) == 1);
  CHECK(big(24, 39) == 1);
  CHECK(big(14, 30) == 0);
  CHECK(big(25, 30) == 0);
  CHECK(big(20, 19) == 0);
  CHECK(big(20, 40) == 0);

  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const BinaryMask m = oracle::random_mask(rng, 24, 31, 0.05);
    const int kh = rng.uniform_int(1, 12), kw = rng.uniform_int(1, 22);
    const BinaryMask d = dilate(m, kh, kw);
    CHECK(d == oracle::dilate(m, kh, kw));
    CHECK(mask_and(d, m) == m);  // extensive
    BinaryMask sup = mask_or(m, oracle::random_mask(rng, 24, 31, 0.05));
    CHECK(mask_and(dilate(sup, kh, kw), d) == d);  // monotone
  }
}

TEST_CASE("bfm_mask composition") {
  const BfmConfig cfg;
  Rng rng(5);
  const DepthMap d = oracle::random_map(rng, 16, 16, 1, 4);
  BinaryMask all(16, 16, 1);
  CHECK(bfm_mask(d, d, cfg) == all);

  // Coarse and gt both flat away from one extreme pixel in opposite
  // directions: no edges under threshold, every other pixel unreliable.
  DepthMap c(16, 16, 1.0f), g(16, 16, 0.0f);
  c(0, 0) = 0.0f;
  g(0, 0) = 1.0f;
  BfmConfig hi = cfg;
  hi.edge_grad_threshold = 10.0;
  CHECK(mask_count(bfm_mask(c, g, hi)) == 0);

  // Window: coarse sees a flat pane where gt sees the background with a
  // depth edge inside it.
  DepthMap coarse(64, 64, 5.0f), gt(64, 64, 5.0f);
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < 56; ++x) {
      coarse(y, x) = 1.0f;
      gt(y, x) = x < 32 ? 8.0f : 10.0f;
    }
  const BfmMasks masks = compute_masks(coarse, gt, cfg);
  BinaryMask window_edges(64, 64);
  for (int y = 20; y < 44; ++y) {
    CHECK(masks.unreliable(y, 32) == 1);
    CHECK(masks.edges_coarse(y, 32) == 0);
    CHECK(masks.edges_gt(y, 32) == 1);
    CHECK(masks.reliable(y, 32) == 0);
    window_edges(y, 32) = 1;
  }
  CHECK(mask_count(mask_and(edge_map(gt, cfg), window_edges)) == 24);

  for (int t = 0; t < 50; ++t) {
    const DepthMap a = oracle::random_map(rng, 20, 20, 0, 3), b = oracle::random_map(rng, 20, 20, 0, 3);
    const BfmMasks mm = compute_masks(a, b, cfg);
    CHECK(mask_and(mm.reliable, mask_not(mm.unreliable)) == mask_not(mm.unreliable));
    CHECK(mm.edge == mask_and(mm.edges_coarse, mm.edges_gt));
    CHECK(mm.reliable == mask_or(mm.edge, mask_not(mm.unreliable)));
    CHECK(mm.reliable == bfm_mask(a, b, cfg));
  }
}

TEST_CASE("should_discard_sample is strict") {
  const BfmConfig cfg;
  CHECK_FALSE(should_discard_sample(BinaryMask(10, 10, 0), cfg));
  CHECK(should_discard_sample(BinaryMask(10, 10, 1), cfg));
  BinaryMask m(10, 10);
  for (int i = 0; i < 50; ++i) m[i] = 1;
  CHECK_FALSE(should_discard_sample(m, cfg));
  m[50] = 1;
  CHECK(should_discard_sample(m, cfg));
}

TEST_CASE("BfmConfig validation") {
  BfmConfig c;
  c.tau = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = BfmConfig{};
  c.dilate_kw = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = BfmConfig{};
  c.discard_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
