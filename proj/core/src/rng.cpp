#include "bandit/rng.hpp"

#include <cmath>

#include "bandit/errors.hpp"

namespace bandit {

double Rng::uniform01() {
  // 53 random bits onto [0,1).
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) fail(Errc::EmptyArmSet, "uniform_index over zero elements");
  // Rejection-free multiply-shift; bias is < 2^-64 * n, irrelevant here.
  __uint128_t wide = static_cast<__uint128_t>(gen_()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::gaussian() {
  double u1 = uniform01();
  double u2 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) fail(Errc::OutOfRange, "gamma shape must be > 0");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back.
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = gaussian();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform01();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

int64_t Rng::geometric_mean(double mean) {
  if (mean <= 0.0) return 0;
  const double p = 1.0 / (mean + 1.0);
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  // Inverse CDF of the geometric distribution on {0,1,...}.
  return static_cast<int64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

Rng Rng::fork() {
  uint64_t seed = gen_() ^ 0x9e3779b97f4a7c15ULL;
  return Rng(seed);
}

}  // namespace bandit
