#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>

namespace qnet {

// What a sub-stream is used for. Part of the stream key, so two purposes
// never share draws even at the same (run, step, queue).
enum class Purpose : std::uint64_t {
  arrivals = 1,
  losses = 2,
  demands = 3,
  timeouts = 4,
  greedy = 5,
  parasitic = 6,
  routing = 7,
  topology = 8,
  policy = 9,
};

/// Counter-based random stream.
///
/// A stream is a (key, counter) pair. The key is built by hashing the master
/// seed together with any number of key components (run, step, queue,
/// purpose, ...); draws are a bijective mix of key and counter. Identical keys
/// give identical sequences no matter which thread or in which order streams
/// are created, which is what makes sweeps reproducible under parallelism.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t master_seed = 0);

  /// Child stream keyed by `component` under this stream's key. The parent
  /// counter is not consumed.
  [[nodiscard]] RngStream derive(std::uint64_t component) const;
  [[nodiscard]] RngStream derive(Purpose purpose) const {
    return derive(static_cast<std::uint64_t>(purpose));
  }
  [[nodiscard]] RngStream derive(std::initializer_list<std::uint64_t> components) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform integer on [0, bound). `bound` must be positive.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Poisson(mean). Inversion below mean 10, PTRS transformed rejection above.
  std::int64_t poisson(double mean);

  /// Binomial(trials, p). Bernoulli sum below 64 trials; otherwise inversion
  /// when the smaller tail mean is below 10, BTRS transformed rejection above.
  std::int64_t binomial(std::int64_t trials, double p);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  [[nodiscard]] std::uint64_t key() const { return key_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::int64_t poisson_inversion(double mean);
  std::int64_t poisson_ptrs(double mean);
  std::int64_t binomial_inversion(std::int64_t trials, double p);
  std::int64_t binomial_btrs(std::int64_t trials, double p);

  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Mixes a 64-bit value (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

}  // namespace qnet
