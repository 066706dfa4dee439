#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "qnet/errors.hpp"
#include "qnet/rng.hpp"
#include "qnet/stochastic.hpp"

using namespace qnet;

namespace {

struct Moments {
  double mean{0.0};
  double variance{0.0};
};

template <typename Draw>
Moments moments(int n, Draw draw) {
  double sum = 0.0;
  double sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto x = static_cast<double>(draw(k));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  return {mean, sq / n - mean * mean};
}

NetworkModel single_link(double alpha, double beta, double eta = 0.9) {
  return fixture::model(fixture::chain_graph({"A", "B"}, alpha), {{{{"A", "B"}}, beta}}, eta);
}

}  // namespace

TEST(RngStream, SameKeySameSequence) {
  RngStream a = RngStream(9).derive({1, 2, 3});
  RngStream b = RngStream(9).derive({1, 2, 3});
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctKeysDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t run = 0; run < 20; ++run) {
    for (std::uint64_t step = 0; step < 20; ++step) firsts.insert(step_stream(1, run, step).next_u64());
  }
  EXPECT_EQ(firsts.size(), 400u);
  EXPECT_NE(RngStream(1).derive({1, 2}).key(), RngStream(1).derive({2, 1}).key());
  EXPECT_NE(RngStream(1).derive(Purpose::arrivals).key(), RngStream(1).derive(Purpose::losses).key());
}

TEST(RngStream, DeriveLeavesParentUntouched) {
  RngStream a(3);
  RngStream b(3);
  (void)a.derive(7).next_u64();
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, UniformRanges) {
  RngStream r(5);
  std::vector<int> bins(6, 0);
  for (int k = 0; k < 60000; ++k) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++bins[r.uniform_int(6)];
  }
  for (int b : bins) EXPECT_NEAR(b, 10000, 400);
  EXPECT_THROW(r.uniform_int(0), std::invalid_argument);
}

TEST(RngStream, PoissonMeansAcrossAlgorithms) {
  for (double mean : {0.3, 1.0, 2.0, 9.5, 10.0, 37.0, 400.0}) {
    RngStream r(static_cast<std::uint64_t>(mean * 100));
    const Moments m = moments(100000, [&](int) { return r.poisson(mean); });
    EXPECT_NEAR(m.mean, mean, 0.01 * mean) << "mean " << mean;
    EXPECT_NEAR(m.variance, mean, 0.03 * mean) << "mean " << mean;
  }
  RngStream r(1);
  EXPECT_EQ(r.poisson(0.0), 0);
  EXPECT_THROW(r.poisson(-1.0), std::invalid_argument);
}

TEST(RngStream, BinomialMomentsAcrossAlgorithms) {
  const std::vector<std::pair<std::int64_t, double>> cases{{10, 0.3}, {63, 0.5}, {100, 0.05}, {1000, 0.004},
                                                           {200, 0.4}, {5000, 0.9}, {100000, 0.1}};
  for (const auto& [n, p] : cases) {
    RngStream r(static_cast<std::uint64_t>(n) * 31 + 7);
    const Moments m = moments(20000, [&](int) { return r.binomial(n, p); });
    const double mean = static_cast<double>(n) * p;
    const double sd = std::sqrt(mean * (1.0 - p));
    // Standard error of the sample mean is sd / sqrt(20000).
    EXPECT_NEAR(m.mean, mean, 4.0 * sd / std::sqrt(20000.0)) << n << " " << p;
    EXPECT_NEAR(m.variance, sd * sd, 0.05 * sd * sd + 1e-9) << n << " " << p;
  }
  RngStream r(2);
  EXPECT_EQ(r.binomial(0, 0.5), 0);
  EXPECT_EQ(r.binomial(7, 1.0), 7);
  EXPECT_EQ(r.binomial(7, 0.0), 0);
  EXPECT_THROW(r.binomial(-1, 0.5), std::invalid_argument);
  EXPECT_THROW(r.binomial(3, 1.5), std::invalid_argument);
}

TEST(MemoryEfficiency, Values) {
  EXPECT_DOUBLE_EQ(memory_efficiency(0.0, 1.0), 1.0);
  EXPECT_NEAR(memory_efficiency(2.5, 2.5), 0.367879, 1e-6);
  EXPECT_LT(memory_efficiency(1000.0, 1.0), 1e-300);
  EXPECT_THROW(memory_efficiency(1.0, 0.0), ParameterError);
  EXPECT_THROW(memory_efficiency(-1.0, 1.0), ParameterError);
}

TEST(Sampling, ArrivalsOnlyOnPhysicalQueues) {
  const NetworkModel m = fixture::abcd(0.5);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const CountVector a = sample_arrivals(m, step_stream(4, 0, t));
    for (int q = 0; q < m.n_queues(); ++q) {
      if (!m.queues.is_physical(q)) EXPECT_EQ(a(q), 0);
    }
  }
  const NetworkModel dead = single_link(0.0, 0.0);
  for (std::uint64_t t = 0; t < 100; ++t) EXPECT_EQ(sample_arrivals(dead, step_stream(4, 0, t)).sum(), 0);
}

TEST(Sampling, ArrivalMeanWithinOnePercent) {
  const NetworkModel m = single_link(1.0, 0.0);
  const Moments mo = moments(100000, [&](int t) {
    return sample_arrivals(m, step_stream(2024, 0, static_cast<std::uint64_t>(t)))(0);
  });
  EXPECT_NEAR(mo.mean, 1.0, 0.01);
}

TEST(Sampling, DemandMeanWithinOnePercent) {
  const NetworkModel m = single_link(1.0, 2.0);
  const Moments mo = moments(100000, [&](int t) {
    return sample_demands(m, step_stream(77, 1, static_cast<std::uint64_t>(t)))(0);
  });
  EXPECT_NEAR(mo.mean, 2.0, 0.02);
}

TEST(Sampling, DemandsOnlyOnUserPairs) {
  const NetworkModel m = fixture::abcd(3.0);
  const int ad = m.queue("A", "D");
  for (std::uint64_t t = 0; t < 200; ++t) {
    const CountVector b = sample_demands(m, step_stream(8, 0, t));
    for (int q = 0; q < m.n_queues(); ++q) {
      if (q != ad) EXPECT_EQ(b(q), 0);
    }
  }
  const NetworkModel quiet = fixture::abcd(0.0);
  for (std::uint64_t t = 0; t < 100; ++t) EXPECT_EQ(sample_demands(quiet, step_stream(8, 0, t)).sum(), 0);
}

TEST(Sampling, LossesBoundedByBacklog) {
  RngStream base(12);
  for (std::uint64_t t = 0; t < 500; ++t) {
    CountVector q(4);
    q << 0, 1, 5, static_cast<Count>(t);
    const CountVector l = sample_losses(q, 0.7, step_stream(12, 0, t));
    EXPECT_EQ(l(0), 0);
    EXPECT_TRUE(((l.array() >= 0) && (l.array() <= q.array())).all());
    EXPECT_EQ(sample_losses(q, 1.0, step_stream(12, 0, t)).sum(), 0);
  }
}

TEST(Sampling, LargeBacklogLossWithinThreeSigma) {
  CountVector q(1);
  q << 100000;
  const double sigma = std::sqrt(100000 * 0.1 * 0.9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Count l = sample_losses(q, 0.9, step_stream(seed, 0, 0))(0);
    EXPECT_NEAR(static_cast<double>(l), 10000.0, 3.0 * sigma);
  }
}

TEST(Sampling, SurvivalTimeIsGeometric) {
  // Every ebit alive at the start of a step contributes one step of lifetime.
  const double eta = 0.9;
  CountVector q(1);
  q << 100000;
  const double population = 100000.0;
  double lifetime = 0.0;
  for (std::uint64_t t = 0; q(0) > 0; ++t) {
    lifetime += static_cast<double>(q(0));
    q -= sample_losses(q, eta, step_stream(99, 0, t));
  }
  EXPECT_NEAR(lifetime / population, 1.0 / (1.0 - eta), 0.02 / (1.0 - eta));
}

TEST(Sampling, StepIsDeterministic) {
  const NetworkModel m = fixture::chain4_benchmark(0.7, 0.4);
  CountVector q = CountVector::Constant(m.n_queues(), 3);
  const StepRealization a = sample_step(m, q, step_stream(5, 2, 9));
  const StepRealization b = sample_step(m, q, step_stream(5, 2, 9));
  EXPECT_EQ(a.arrivals, b.arrivals);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.demands, b.demands);
}
