#pragma once

#include <cstdint>
#include <random>

namespace bandit {

// Seeded random source with hand-rolled distributions. std:: distribution
// objects are not required to produce the same stream across standard
// libraries; every draw here is pinned to the mt19937_64 word stream, so a
// seed fully determines platform behavior (the replayability contract).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform01();

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller.
  double gaussian();

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape > 0.
  double gamma(double shape);

  // Beta(a, b); a, b > 0.
  double beta(double a, double b);

  // Geometric on {0, 1, ...} with the given mean (P(d) = p(1-p)^d).
  int64_t geometric_mean(double mean);

  // Independent stream derived from this one's seed material.
  Rng fork();

 private:
  std::mt19937_64 gen_;
};

}  // namespace bandit
