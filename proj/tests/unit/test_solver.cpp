#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qnet/errors.hpp"
#include "qnet/policies.hpp"
#include "qnet/solver.hpp"

using namespace qnet;

namespace {

Matrix<double> rows(std::initializer_list<std::initializer_list<double>> values) {
  const auto n_rows = static_cast<Eigen::Index>(values.size());
  const auto n_cols = static_cast<Eigen::Index>(values.begin()->size());
  Matrix<double> a(n_rows, n_cols);
  Eigen::Index i = 0;
  for (const auto& row : values) {
    Eigen::Index j = 0;
    for (double v : row) a(i, j++) = v;
    ++i;
  }
  return a;
}

RealVector vec(std::initializer_list<double> values) {
  RealVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

// Small random program with r = 0 feasible and box volume at most 2e4.
IntegerProgram random_program(RngStream& gen) {
  const int n = 1 + static_cast<int>(gen.uniform_int(10));
  const int m = 1 + static_cast<int>(gen.uniform_int(5));
  IntegerProgram p;
  p.w = RealVector(n);
  p.psi = RealVector::Zero(n);
  p.a = Matrix<double>::Zero(m, n);
  p.c = RealVector(m);
  p.upper = CountVector(n);
  const bool quadratic = gen.uniform() < 0.5;
  for (int v = 0; v < n; ++v) {
    p.w(v) = static_cast<double>(static_cast<int>(gen.uniform_int(13)) - 8) * (gen.uniform() < 0.3 ? 0.25 : 1.0);
    if (quadratic) p.psi(v) = static_cast<double>(gen.uniform_int(3)) * 0.5;
    p.upper(v) = static_cast<Count>(gen.uniform_int(5));
  }
  double volume = 1.0;
  for (int v = 0; v < n; ++v) volume *= static_cast<double>(p.upper(v) + 1);
  for (int v = 0; volume > 2e4; v = (v + 1) % n) {
    if (p.upper(v) > 1) {
      volume = volume / static_cast<double>(p.upper(v) + 1) * static_cast<double>(p.upper(v));
      --p.upper(v);
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int v = 0; v < n; ++v) p.a(i, v) = static_cast<double>(static_cast<int>(gen.uniform_int(5)) - 1);
    p.c(i) = static_cast<double>(gen.uniform_int(7)) + (gen.uniform() < 0.3 ? 0.5 : 0.0);
  }
  if (gen.uniform() < 0.5) {
    for (int v = 0; v < n; ++v) p.tie_order.push_back({v, gen.uniform() < 0.5});
    gen.shuffle(std::span<TieKey>(p.tie_order));
  }
  return p;
}

}  // namespace

TEST(DeriveBounds, SingleSharedRow) {
  const CountVector u = derive_bounds(rows({{1, 1}}), vec({3}));
  EXPECT_EQ(u(0), 3);
  EXPECT_EQ(u(1), 3);
}

TEST(DeriveBounds, ZeroRhsGivesZeroBox) {
  const CountVector u = derive_bounds(rows({{1, 2, 0}, {0, 1, 3}}), vec({0, 0}));
  EXPECT_EQ(u, CountVector::Zero(3));
  const IntegerProgram p = make_program(vec({-1, -2, -3}), RealVector::Zero(3), rows({{1, 2, 0}, {0, 1, 3}}),
                                        vec({0, 0}));
  EXPECT_EQ(solve(p).r, CountVector::Zero(3));
}

TEST(DeriveBounds, ChainRowBC) {
  const NetworkModel m = fixture::abcd();
  SystemState s = SystemState::empty(m.n_queues());
  const int order[] = {m.queue("A", "B"), m.queue("B", "C"), m.queue("C", "D"),
                       m.queue("A", "C"), m.queue("B", "D"), m.queue("A", "D")};
  const Count values[] = {2, 1, 1, 0, 0, 0};
  for (int k = 0; k < 6; ++k) s.q(order[k]) = values[k];
  const auto [a, c] = build_constraints(m, make_full_info(s, StepRealization::zero(m.n_queues())));
  const CountVector u = derive_bounds(a, c);
  EXPECT_EQ(u(m.transition("A", "B", "C")), 1);
}

TEST(DeriveBounds, NegativeCoefficientsNeedTheOtherBound) {
  // r0 - r1 <= 1 and r1 <= 2 allow r0 = 3.
  const CountVector u = derive_bounds(rows({{1, -1}, {0, 1}}), vec({1, 2}));
  EXPECT_EQ(u(0), 3);
  EXPECT_EQ(u(1), 2);
  const IntegerProgram p = make_program(vec({-1, 0}), RealVector::Zero(2), rows({{1, -1}, {0, 1}}), vec({1, 2}));
  EXPECT_EQ(solve(p).r(0), 3);
}

TEST(DeriveBounds, UnboundedVariableThrows) {
  EXPECT_THROW(derive_bounds(rows({{1, 0}}), vec({3})), ProgramError);
  EXPECT_THROW(derive_bounds(rows({{1, -1}}), vec({3})), ProgramError);
}

TEST(Solve, ZeroObjectivePicksZero) {
  const IntegerProgram p = make_program(RealVector::Zero(3), RealVector::Zero(3), rows({{1, 1, 1}}), vec({4}));
  const Solution s = solve(p);
  EXPECT_EQ(s.r, CountVector::Zero(3));
  EXPECT_DOUBLE_EQ(s.objective, 0.0);
  EXPECT_EQ(s.status, SolveStatus::exact);
}

TEST(Solve, OneQueueQuadraticToy) {
  const IntegerProgram p = make_program(vec({-4}), vec({1}), rows({{1}}), vec({3}));
  const Solution s = solve(p);
  EXPECT_EQ(s.r(0), 2);
  EXPECT_DOUBLE_EQ(s.objective, -4.0);
  const auto e = oracle::enumerate(p);
  EXPECT_EQ(e.best(0), 2);
}

TEST(Solve, MatchesEnumerationOnRandomPrograms) {
  RngStream gen(4242);
  for (int it = 0; it < 300; ++it) {
    const IntegerProgram p = random_program(gen);
    const auto expected = oracle::enumerate(p);
    const Solution s = solve(p);
    ASSERT_EQ(s.status, SolveStatus::exact);
    EXPECT_NEAR(s.objective, expected.objective, 1e-9) << "instance " << it;
    EXPECT_EQ(s.r, expected.best) << "instance " << it;
    EXPECT_TRUE(oracle::feasible(p, s.r));
    EXPECT_LE(s.objective, 0.0);
  }
}

TEST(Solve, RemovingARowNeverRaisesTheOptimum) {
  RngStream gen(77);
  for (int it = 0; it < 200; ++it) {
    IntegerProgram p = random_program(gen);
    if (p.n_rows() < 2) continue;
    const double full = solve(p).objective;
    const auto drop = static_cast<Eigen::Index>(gen.uniform_int(static_cast<std::uint64_t>(p.n_rows())));
    IntegerProgram relaxed = p;
    relaxed.a = Matrix<double>(p.n_rows() - 1, p.n_vars());
    relaxed.c = RealVector(p.n_rows() - 1);
    for (Eigen::Index i = 0, k = 0; i < p.n_rows(); ++i) {
      if (i == drop) continue;
      relaxed.a.row(k) = p.a.row(i);
      relaxed.c(k++) = p.c(i);
    }
    EXPECT_LE(solve(relaxed).objective, full + 1e-9);
  }
}

TEST(Solve, Deterministic) {
  RngStream gen(5);
  for (int it = 0; it < 50; ++it) {
    const IntegerProgram p = random_program(gen);
    const Solution a = solve(p);
    const Solution b = solve(p);
    EXPECT_EQ(a.r, b.r);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.nodes, b.nodes);
  }
}

TEST(Solve, BudgetExhaustionReturnsFeasibleIncumbent) {
  RngStream gen(8);
  IntegerProgram p;
  do {
    p = random_program(gen);
  } while (solve(p).nodes < 3);
  const Solution s = solve(p, SolverOptions{1});
  EXPECT_EQ(s.status, SolveStatus::search_exhausted);
  EXPECT_TRUE(oracle::feasible(p, s.r));
  EXPECT_LE(s.objective, 0.0);
}

TEST(Solve, RejectsMalformedPrograms) {
  IntegerProgram p = make_program(vec({-1}), vec({0}), rows({{1}}), vec({2}));
  p.psi(0) = -1.0;
  EXPECT_THROW(solve(p), ProgramError);
  p.psi(0) = 0.0;
  p.tie_order = {{0, false}, {0, true}};
  EXPECT_THROW(solve(p), ProgramError);
}

TEST(ProgramText, RoundTrip) {
  RngStream gen(31);
  for (int it = 0; it < 50; ++it) {
    const IntegerProgram p = random_program(gen);
    std::stringstream io;
    write_program(io, p);
    const IntegerProgram q = read_program(io);
    EXPECT_EQ(q.w, p.w);
    EXPECT_EQ(q.psi, p.psi);
    EXPECT_EQ(q.a, p.a);
    EXPECT_EQ(q.c, p.c);
    EXPECT_EQ(q.upper, p.upper);
    EXPECT_EQ(q.tie_order, p.tie_order);
    std::stringstream again;
    write_program(again, q);
    std::stringstream first;
    write_program(first, p);
    EXPECT_EQ(again.str(), first.str());
  }
}

TEST(ProgramText, RejectsGarbage) {
  std::istringstream bad("vars 2 rows x");
  EXPECT_THROW(read_program(bad), ProgramError);
}
