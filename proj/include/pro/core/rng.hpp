#pragma once

#include <cstdint>

namespace pro {

// Counter-based generator: draw k of stream s under seed is a pure function
// of (seed, s, k), so independent consumers (scene generation, jitter,
// weight init) can each own a stream without sharing state. Only integer
// arithmetic is involved, so the integer stream is identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  // A generator on an independent stream derived from this one's key.
  Rng fork(std::uint64_t sub_stream) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] (inclusive).
  int uniform_int(int lo, int hi);
  double normal();
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// SplitMix64 finalizer; also used as a general-purpose 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace pro
