#include "qnet/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace qnet {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RngStream::RngStream(std::uint64_t master_seed) : key_(mix64(master_seed + kGolden)), counter_(0) {}

RngStream RngStream::derive(std::uint64_t component) const {
  // Asymmetric combination so that derive(a).derive(b) != derive(b).derive(a).
  const std::uint64_t k = mix64(key_ ^ mix64(component + kGolden * 3)) + kGolden;
  return RngStream(mix64(k), 0);
}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> components) const {
  RngStream s = *this;
  for (auto c : components) s = s.derive(c);
  return s;
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_int: bound must be positive");
  // Rejection on the top of the range keeps the result unbiased.
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

std::int64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  return mean < 10.0 ? poisson_inversion(mean) : poisson_ptrs(mean);
}

std::int64_t RngStream::poisson_inversion(double mean) {
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    // Guards the float tail: cdf can stall just below 1.
    if (p < 1e-300 && static_cast<double>(k) > mean) break;
  }
  return k;
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables".
std::int64_t RngStream::poisson_ptrs(double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b);
    const double rhs = -mean + static_cast<double>(k) * loglam - std::lgamma(static_cast<double>(k) + 1.0);
    if (lhs <= rhs) return k;
  }
}

std::int64_t RngStream::binomial(std::int64_t trials, double p) {
  if (trials < 0) throw std::invalid_argument("binomial: trials must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p must lie in [0, 1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  if (trials < 64) {
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < trials; ++i) hits += uniform() < p ? 1 : 0;
    return hits;
  }
  const bool flip = p > 0.5;
  const double pp = flip ? 1.0 - p : p;
  const std::int64_t k = static_cast<double>(trials) * pp < 10.0 ? binomial_inversion(trials, pp)
                                                                 : binomial_btrs(trials, pp);
  return flip ? trials - k : k;
}

std::int64_t RngStream::binomial_inversion(std::int64_t trials, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(trials + 1) * s;
  double r = std::pow(q, static_cast<double>(trials));
  double u = uniform();
  std::int64_t x = 0;
  while (u > r) {
    u -= r;
    ++x;
    if (x > trials) return trials;
    r *= a / static_cast<double>(x) - s;
  }
  return x;
}

// Hörmann (1993), "The generation of binomial random variates" (BTRS).
// Requires trials * p >= 10 and p <= 0.5.
std::int64_t RngStream::binomial_btrs(std::int64_t trials, double p) {
  const double n = static_cast<double>(trials);
  const double q = 1.0 - p;
  const double spq = std::sqrt(n * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double vr = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((n + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(n - m + 1.0);
  for (;;) {
    const double u = uniform() - 0.5;
    double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > n) continue;
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + (k - m) * lpq) {
      return static_cast<std::int64_t>(k);
    }
  }
}

}  // namespace qnet
