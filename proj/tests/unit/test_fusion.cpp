#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pro/fusion/network.hpp"
#include "pro/fusion/wavelet.hpp"

using namespace pro;
using namespace pro::fusion;

namespace {

Tensor<double> rand_t(Rng& rng, int c, int h, int w) {
  Tensor<double> t(c, h, w);
  for (auto& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

NetInputs<double> rand_inputs(Rng& rng, const NetConfig& cfg) {
  const int r = cfg.patch_res, c = cfg.base_channels;
  NetInputs<double> in;
  in.rgb = rand_t(rng, 3, r, r);
  for (auto& v : in.rgb.values()) v = 0.5 + 0.5 * v;
  in.coarse_roi = rand_t(rng, 1, r, r).channel(0);
  in.fine = rand_t(rng, 1, r, r).channel(0);
  for (int j = 0; j < 5; ++j) {
    in.coarse_features.push_back(rand_t(rng, c, cfg.level_size(j), cfg.level_size(j)));
    in.fine_features.push_back(rand_t(rng, c, cfg.level_size(j), cfg.level_size(j)));
  }
  return in;
}

// Relative agreement, with an absolute floor for the rounding noise of a
// central difference of a function of magnitude |f| at step h.
bool fd_agrees(double analytic, double numeric, double f_scale, double h, double rel) {
  const double noise = 10 * 2.2e-16 * std::max(1.0, f_scale) / h;
  return std::abs(numeric - analytic) <= rel * std::max(std::abs(numeric), std::abs(analytic)) + noise;
}

void randomize(ParameterStore<double>& p, const std::string& name, Rng& rng, double scale) {
  for (auto& v : p.at(name).value) v = scale * rng.uniform(-1, 1);
}

}  // namespace

TEST_CASE("haar_dwt examples") {
  const Tensor<double> k(2, 4, 6, 1.25);
  const auto b = haar_dwt(k);
  for (double v : b.ll.values()) CHECK(v == doctest::Approx(2.5));
  for (int i = 1; i < 4; ++i)
    for (double v : b.band(i).values()) CHECK(v == doctest::Approx(0.0));

  Tensor<double> blk(1, 2, 2);
  blk(0, 0, 0) = 1;  // a
  blk(0, 0, 1) = 2;  // b
  blk(0, 1, 0) = 4;  // c
  blk(0, 1, 1) = 8;  // d
  const auto q = haar_dwt(blk);
  CHECK(q.ll[0] == doctest::Approx((1 + 2 + 4 + 8) / 2.0));
  CHECK(q.lh[0] == doctest::Approx((1 + 2 - 4 - 8) / 2.0));
  CHECK(q.hl[0] == doctest::Approx((1 - 2 + 4 - 8) / 2.0));
  CHECK(q.hh[0] == doctest::Approx((1 - 2 - 4 + 8) / 2.0));

  CHECK_THROWS_AS(haar_dwt(Tensor<double>(1, 3, 4)), ShapeError);
  WaveletBands<double> bad{Tensor<double>(1, 2, 2), Tensor<double>(1, 2, 2), Tensor<double>(1, 2, 3),
                           Tensor<double>(1, 2, 2)};
  CHECK_THROWS_AS(haar_idwt(bad), ShapeError);
}

TEST_CASE("haar round trip and energy on 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto f = rand_t(rng, 2, 8, 8);
    const auto b = haar_dwt(f);
    double e_in = 0, e_out = 0, max_err = 0;
    for (double v : f.values()) e_in += v * v;
    for (int i = 0; i < 4; ++i)
      for (double v : b.band(i).values()) e_out += v * v;
    const auto back = haar_idwt(b);
    for (std::size_t i = 0; i < f.size(); ++i) max_err = std::max(max_err, std::abs(back[i] - f[i]));
    CHECK(std::abs(e_in - e_out) < 1e-10);
    CHECK(max_err < 1e-10);
  }
  WaveletBands<double> z{Tensor<double>(1, 3, 3), Tensor<double>(1, 3, 3), Tensor<double>(1, 3, 3),
                         Tensor<double>(1, 3, 3)};
  const auto zero = haar_idwt(z);
  for (double v : zero.values()) CHECK(v == 0.0);
  z.ll.fill(2 * 0.7);
  const auto flat = haar_idwt(z);
  for (double v : flat.values()) CHECK(v == doctest::Approx(0.7));
}

TEST_CASE("ffm shape, determinism and kernel gradients") {
  Rng rng(3);
  ParameterStore<double> params;
  const int c = 3;
  const FfmLayer layer = FfmLayer::create(params, "ffm", c);
  for (auto& p : params)
    for (auto& v : p.value) v = rng.uniform(-0.5, 0.5);
  const auto fc = rand_t(rng, c, 6, 8), ff = rand_t(rng, c, 6, 8);
  const auto out = ffm_forward(fc, ff, layer, params);
  CHECK(out.channels() == c);
  CHECK(out.height() == 6);
  CHECK(out.width() == 8);
  CHECK(ffm_forward(fc, ff, layer, params) == out);
  CHECK_THROWS_AS(ffm_forward(fc, rand_t(rng, c, 6, 6), layer, params), ShapeError);

  // Probe 1 is the sum of outputs, which only sees the LL path; probe 2
  // weights outputs randomly so every band's kernel matters.
  Tensor<double> weights(c, 6, 8);
  for (auto& v : weights.values()) v = rng.uniform(-1, 1);
  for (const Tensor<double>& probe_w : {Tensor<double>(c, 6, 8, 1.0), weights}) {
    FfmCache<double> cache;
    ffm_forward(fc, ff, layer, params, &cache);
    params.zero_grad();
    ffm_backward(cache, probe_w, layer, params);
    auto probe = [&] {
      const auto o = ffm_forward(fc, ff, layer, params);
      double s = 0;
      for (std::size_t i = 0; i < o.size(); ++i) s += probe_w[i] * o[i];
      return s;
    };
    const double h = 1e-6;
    for (auto& p : params) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double x0 = p.value[i];
        p.value[i] = x0 + h;
        const double fp = probe();
        p.value[i] = x0 - h;
        const double fm = probe();
        p.value[i] = x0;
        const double numeric = (fp - fm) / (2 * h);
        INFO(p.name << "[" << i << "] analytic " << p.grad[i] << " numeric " << numeric);
        CHECK(fd_agrees(p.grad[i], numeric, std::abs(fp), h, 1e-3));
      }
    }
  }
}

TEST_CASE("NetConfig validation") {
  NetConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.patch_res = 96;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.patch_res = 64;
  CHECK_NOTHROW(cfg.validate());
  cfg.levels = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("fresh network is the identity refinement") {
  NetConfig cfg{4, 5, 64};
  const ResidualNet net(cfg);
  const auto params = net.make_parameters<double>(11);
  Rng rng(1);
  const auto in = rand_inputs(rng, cfg);
  const auto out = net.forward(in, params);
  CHECK(out.residual.height() == 64);
  CHECK(out.residual.width() == 64);
  for (double v : out.residual.values()) CHECK(v == 0.0);
  CHECK(refine_patch(in.coarse_roi, out.residual) == in.coarse_roi);
  for (int j = 0; j < 5; ++j) {
    CHECK(out.encoder[j].channels() == 4);
    CHECK(out.encoder[j].height() == cfg.level_size(j));
  }
  // Float wrapper agrees in shape and zero output.
  const auto pf = net.make_parameters<float>(11);
  RgbImage img(64, 64);
  FeaturePyramid fc, ff;
  for (int j = 0; j < 5; ++j) {
    fc.levels.push_back(tensor_cast<float>(in.coarse_features[j]));
    ff.levels.push_back(tensor_cast<float>(in.fine_features[j]));
  }
  const auto rr = residual_forward(img, raster_cast<float>(in.coarse_roi), raster_cast<float>(in.fine), fc, ff, pf, cfg);
  CHECK(rr.residual == DepthMap(64, 64, 0.0f));
  CHECK(rr.encoder.levels.size() == 5);
}

TEST_CASE("refine_patch") {
  CHECK(refine_patch(Raster<float>(3, 3, 2.0f), Raster<float>(3, 3, 1.0f)) == Raster<float>(3, 3, 3.0f));
  CHECK_THROWS_AS(refine_patch(Raster<float>(3, 3), Raster<float>(3, 4)), ShapeError);
}

TEST_CASE("initialization is seeded and fan-in scaled") {
  const ResidualNet net(NetConfig{8, 5, 64});
  const auto a = net.make_parameters<float>(5), b = net.make_parameters<float>(5), c = net.make_parameters<float>(6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const auto& w = a.at("enc0.w");
  const double fan_in = 5 * 9;
  double s2 = 0;
  for (float v : w.value) s2 += double(v) * v;
  const double want = 2.0 / ((1 + 0.01) * fan_in);
  CHECK(s2 / w.size() == doctest::Approx(want).epsilon(0.3));
  for (float v : a.at("head.w").value) CHECK(v == 0.0f);
  for (float v : a.at("enc0.b").value) CHECK(v == 0.0f);
  CHECK(a.contains("ffm4.hh.w"));
  CHECK(a.contains("reduce2b.b"));
  CHECK(a.contains("dec4.w"));
}

TEST_CASE("check_parameters rejects mismatched stores") {
  const ResidualNet net(NetConfig{4, 5, 64});
  const ResidualNet other(NetConfig{8, 5, 64});
  CHECK_NOTHROW(net.check_parameters(net.make_parameters<float>(1)));
  CHECK_THROWS_AS(net.check_parameters(other.make_parameters<float>(1)), VersionError);
}

TEST_CASE("network backward matches finite differences") {
  NetConfig cfg{2, 5, 64};
  const ResidualNet net(cfg);
  auto params = net.make_parameters<double>(21);
  CHECK(params.scalar_count() <= 5000);
  Rng rng(8);
  randomize(params, "head.w", rng, 0.5);
  randomize(params, "head.b", rng, 0.5);
  const auto in = rand_inputs(rng, cfg);
  // Probe: sum(w * R) + 0.5 * sum(R^2) with random fixed w.
  Raster<double> wprobe(64, 64);
  for (auto& v : wprobe.values()) v = rng.uniform(-1, 1);
  auto loss = [&](const ParameterStore<double>& p, Raster<double>* grad) {
    NetTape<double> tape;
    const auto out = net.forward(in, p, grad ? &tape : nullptr);
    double l = 0;
    Raster<double> g(64, 64);
    for (std::size_t i = 0; i < g.size(); ++i) {
      l += wprobe[i] * out.residual[i] + 0.5 * out.residual[i] * out.residual[i];
      g[i] = wprobe[i] + out.residual[i];
    }
    if (grad) *grad = g;
    return std::make_pair(l, tape);
  };
  params.zero_grad();
  Raster<double> g;
  auto [l0, tape] = loss(params, &g);
  net.backward(tape, g, params);

  const double h = 1e-5;
  int checked = 0;
  for (auto& p : params) {
    std::set<std::size_t> picks;
    if (p.size() <= 16) {
      for (std::size_t i = 0; i < p.size(); ++i) picks.insert(i);
    } else {
      while (picks.size() < 16) picks.insert(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(p.size()) - 1)));
    }
    for (std::size_t i : picks) {
      const double x0 = p.value[i];
      p.value[i] = x0 + h;
      const double fp = loss(params, nullptr).first;
      p.value[i] = x0 - h;
      const double fm = loss(params, nullptr).first;
      p.value[i] = x0;
      const double numeric = (fp - fm) / (2 * h);
      INFO(p.name << "[" << i << "] analytic " << p.grad[i] << " numeric " << numeric);
      CHECK(fd_agrees(p.grad[i], numeric, std::abs(fp), h, 1e-3));
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("every parameter receives gradient") {
  // At 128 the coarsest sub-bands are 2x2, so every 3x3 tap touches data.
  NetConfig cfg{2, 5, 128};
  const ResidualNet net(cfg);
  auto params = net.make_parameters<double>(4);
  Rng rng(12);
  randomize(params, "head.w", rng, 0.5);
  ParameterStore<double> seen = params;
  seen.zero_grad();
  for (int ex = 0; ex < 3; ++ex) {
    const auto in = rand_inputs(rng, cfg);
    NetTape<double> tape;
    const auto out = net.forward(in, params, &tape);
    Raster<double> g(128, 128);
    for (auto& v : g.values()) v = rng.uniform(-1, 1);
    params.zero_grad();
    net.backward(tape, g, params);
    for (std::size_t k = 0; k < params.size(); ++k)
      for (std::size_t i = 0; i < params[k].size(); ++i)
        if (params[k].grad[i] != 0.0) seen[k].grad[i] = 1.0;
  }
  std::size_t dead = 0;
  for (const auto& p : seen)
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p.grad[i] == 0.0) {
        ++dead;
        INFO("dead " << p.name << "[" << i << "]");
        CHECK(false);
        if (dead > 5) return;
      }
  CHECK(dead == 0);
}

TEST_CASE("forward is bit-identical across evaluations") {
  NetConfig cfg{4, 5, 64};
  const ResidualNet net(cfg);
  auto params = net.make_parameters<float>(2);
  Rng rng(5);
  for (auto& v : params.at("head.w").value) v = static_cast<float>(rng.uniform(-1, 1));
  const auto ind = rand_inputs(rng, cfg);
  NetInputs<float> in;
  in.rgb = tensor_cast<float>(ind.rgb);
  in.coarse_roi = raster_cast<float>(ind.coarse_roi);
  in.fine = raster_cast<float>(ind.fine);
  for (int j = 0; j < 5; ++j) {
    in.coarse_features.push_back(tensor_cast<float>(ind.coarse_features[j]));
    in.fine_features.push_back(tensor_cast<float>(ind.fine_features[j]));
  }
  const auto a = net.forward(in, params), b = net.forward(in, params);
  CHECK(a.residual == b.residual);
  bool nonzero = false;
  for (float v : a.residual.values()) nonzero = nonzero || v != 0.0f;
  CHECK(nonzero);
}

TEST_CASE("checkpoint container round trip and errors") {
  const ResidualNet net(NetConfig{4, 5, 64});
  auto p = net.make_parameters<float>(9);
  const auto bytes = serialize_parameters(p);
  CHECK(bytes[0] == 'P');
  CHECK(bytes[3] == '1');
  CHECK(deserialize_parameters(bytes) == p);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_parameters(bad), VersionError);
  auto trunc = bytes;
  trunc.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_parameters(trunc), ParseError);
}
