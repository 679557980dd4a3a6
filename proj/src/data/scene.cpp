#include "pro/data/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "pro/core/rng.hpp"

namespace pro::data {
namespace {

enum class Shape { Box, Sphere, Plane };

struct Primitive {
  Shape shape;
  bool transparent;
  double cx, cy;    // centre, pixels
  double rx, ry;    // half extents, pixels
  double z;         // depth at the centre
  double gx, gy;    // depth gradient per pixel (planes and boxes)
  double bulge;     // sphere depth relief
  std::array<double, 3> color;
  double stripe_angle;
  std::uint64_t tex_seed;

  // Depth at (x, y) if covered.
  bool sample(double x, double y, double& depth) const {
    const double u = (x - cx) / rx;
    const double v = (y - cy) / ry;
    switch (shape) {
      case Shape::Box:
      case Shape::Plane:
        if (std::abs(u) > 1 || std::abs(v) > 1) return false;
        depth = z + gx * (x - cx) + gy * (y - cy);
        return true;
      case Shape::Sphere: {
        const double r2 = u * u + v * v;
        if (r2 > 1) return false;
        depth = z - bulge * std::sqrt(1 - r2);
        return true;
      }
    }
    return false;
  }

  // Signed distance-ish value in pixels from the outline (positive inside).
  double inset(double x, double y) const {
    const double u = (x - cx) / rx;
    const double v = (y - cy) / ry;
    if (shape == Shape::Sphere) return (1 - std::sqrt(u * u + v * v)) * std::min(rx, ry);
    return std::min((1 - std::abs(u)) * rx, (1 - std::abs(v)) * ry);
  }
};

double hash01(std::uint64_t seed, long ix, long iy) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL ^
                                             static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smooth value noise in [0, 1].
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3 - 2 * tx);
  ty = ty * ty * (3 - 2 * ty);
  const double a = hash01(seed, ix, iy), b = hash01(seed, ix + 1, iy);
  const double c = hash01(seed, ix, iy + 1), d = hash01(seed, ix + 1, iy + 1);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

double fbm(std::uint64_t seed, double x, double y) {
  double s = 0, amp = 0.5;
  for (int o = 0; o < 3; ++o) {
    s += amp * value_noise(seed + o, x, y);
    x *= 2;
    y *= 2;
    amp *= 0.5;
  }
  return s / 0.875;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

void GenConfig::validate() const {
  if (size < 64 || size % 4 != 0) throw ConfigError("gen.size must be >= 64 and divisible by 4");
  if (min_primitives < 0 || max_primitives < min_primitives)
    throw ConfigError("gen primitive count range is invalid");
  if (!(transparent_prob >= 0.0 && transparent_prob <= 1.0))
    throw ConfigError("gen.transparent_prob must lie in [0, 1]");
  if (!(texture_scale > 0.0)) throw ConfigError("gen.texture_scale must be > 0");
}

std::uint64_t scene_seed(std::uint64_t base_seed, std::uint64_t index) {
  return mix64(mix64(base_seed) ^ (index + 0x5ce4e));
}

Scene generate_scene(const GenConfig& cfg) {
  cfg.validate();
  const int n = cfg.size;
  const double s = n;
  Rng rng(cfg.seed, 0x5ce4e);

  // Floor receding from `near` at the bottom row to `far` at the top row.
  const double near = rng.uniform(2.0, 3.0);
  const double far = rng.uniform(9.0, 12.0);
  const double tilt = rng.uniform(-0.15, 0.15);
  const double horizon_pow = rng.uniform(0.8, 1.4);
  auto floor_depth = [&](double x, double y) {
    const double t = std::pow(1.0 - y / (s - 1), horizon_pow);
    return near + (far - near) * t * (1.0 + tilt * (x / (s - 1) - 0.5));
  };
  const std::array<double, 3> floor_color{rng.uniform(0.35, 0.6), rng.uniform(0.3, 0.55),
                                          rng.uniform(0.25, 0.5)};
  const std::uint64_t floor_tex = rng.next_u64();

  const int count = rng.uniform_int(cfg.min_primitives, cfg.max_primitives);
  std::vector<Primitive> prims;
  for (int k = 0; k < count; ++k) {
    Primitive p{};
    const double kind = rng.uniform();
    p.shape = kind < 0.4 ? Shape::Box : (kind < 0.75 ? Shape::Sphere : Shape::Plane);
    p.transparent = rng.bernoulli(cfg.transparent_prob);
    p.cx = rng.uniform(0.1, 0.9) * s;
    p.cy = rng.uniform(0.15, 0.85) * s;
    p.rx = rng.uniform(0.07, 0.2) * s;
    p.ry = (p.shape == Shape::Sphere ? p.rx * rng.uniform(0.85, 1.15) : rng.uniform(0.07, 0.2) * s);
    // Glass sits well in front of whatever is behind it.
    const double depth_frac = p.transparent ? rng.uniform(0.28, 0.5) : rng.uniform(0.35, 0.8);
    p.z = floor_depth(p.cx, p.cy) * depth_frac;
    const double slope = p.shape == Shape::Plane ? 0.5 : 0.12;
    p.gx = rng.uniform(-slope, slope) * p.z / s;
    p.gy = rng.uniform(-slope, slope) * p.z / s;
    p.bulge = p.shape == Shape::Sphere ? rng.uniform(0.1, 0.3) * p.z : 0.0;
    p.color = {rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95)};
    p.stripe_angle = rng.uniform(0.0, 3.14159265358979);
    p.tex_seed = rng.next_u64();
    prims.push_back(p);
  }

  Scene sc;
  sc.seed = cfg.seed;
  sc.image = RgbImage(n, n);
  sc.depth_true = DepthMap(n, n);
  sc.depth_labeled = DepthMap(n, n);
  sc.object_edges = BinaryMask(n, n);
  sc.transparent_mask = BinaryMask(n, n);
  Raster<int> visible_id(n, n, 0);

  const double tex_freq = 8.0 * cfg.texture_scale / s;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      // Opaque layer.
      double z = floor_depth(x, y);
      int id = 0;
      std::array<double, 3> rgb;
      {
        const double shade = 0.55 + 0.45 * (near / z);
        const double tex = fbm(floor_tex, x * tex_freq * 3, y * tex_freq * 3 * (far / z));
        for (int c = 0; c < 3; ++c) rgb[c] = floor_color[c] * shade * (0.7 + 0.5 * tex);
      }
      for (std::size_t k = 0; k < prims.size(); ++k) {
        const Primitive& p = prims[k];
        double pz;
        if (p.transparent || !p.sample(x, y, pz) || pz >= z) continue;
        z = pz;
        id = static_cast<int>(k) + 1;
        const double u = (x - p.cx) / p.rx, v = (y - p.cy) / p.ry;
        double light = 0.8;
        if (p.shape == Shape::Sphere) light = 0.35 + 0.65 * clamp01(std::sqrt(std::max(0.0, 1 - u * u - v * v)) - 0.3 * u - 0.3 * v);
        if (p.shape == Shape::Plane) light = 0.6 + 0.4 * clamp01(0.5 + 0.5 * u);
        const double tex = fbm(p.tex_seed, x * tex_freq * 2, y * tex_freq * 2);
        const double stripe =
            0.5 + 0.5 * std::sin((std::cos(p.stripe_angle) * x + std::sin(p.stripe_angle) * y) * tex_freq * 6);
        for (int c = 0; c < 3; ++c) rgb[c] = p.color[c] * light * (0.75 + 0.25 * tex) * (0.85 + 0.15 * stripe);
      }
      const double opaque_z = z;

      // Transparent layer.
      for (std::size_t k = 0; k < prims.size(); ++k) {
        const Primitive& p = prims[k];
        double pz;
        if (!p.transparent || !p.sample(x, y, pz) || pz >= z) continue;
        z = pz;
        id = static_cast<int>(k) + 1;
      }
      const bool glass = z < opaque_z;
      if (glass) {
        const Primitive& p = prims[id - 1];
        const double in = p.inset(x, y);
        const std::array<double, 3> tint{0.55, 0.92, 0.98};
        for (int c = 0; c < 3; ++c) rgb[c] = 0.4 * rgb[c] + 0.6 * tint[c];
        const double along = std::cos(p.stripe_angle) * x + std::sin(p.stripe_angle) * y;
        const double glint = std::fmod(std::abs(along + 0.7 * (x - y)), 0.09 * s);
        if (glint < 0.012 * s)
          for (auto& c : rgb) c = 0.35 * c + 0.65;
        if (in < std::max(2.0, 0.006 * s))
          for (auto& c : rgb) c = 0.97;
      }

      sc.depth_true(y, x) = static_cast<float>(z);
      sc.depth_labeled(y, x) = static_cast<float>(opaque_z);
      sc.transparent_mask(y, x) = glass ? 1 : 0;
      visible_id(y, x) = id;
      for (int c = 0; c < 3; ++c) sc.image(c, y, x) = static_cast<float>(clamp01(rgb[c]));
    }

  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int id = visible_id(y, x);
      const bool edge = (x + 1 < n && visible_id(y, x + 1) != id) ||
                        (y + 1 < n && visible_id(y + 1, x) != id) ||
                        (x > 0 && visible_id(y, x - 1) != id) || (y > 0 && visible_id(y - 1, x) != id);
      sc.object_edges(y, x) = edge ? 1 : 0;
    }
  return sc;
}

}  // namespace pro::data
