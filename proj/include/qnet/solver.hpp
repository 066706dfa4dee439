#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qnet/types.hpp"

namespace qnet {

/// One entry of a tie-breaking order: among optimal solutions, compare
/// variable `var` first, preferring smaller values unless `maximize`.
struct TieKey {
  int var{0};
  bool maximize{false};
  bool operator==(const TieKey&) const = default;
};

/// min w.r + sum_v psi_v r_v^2  s.t.  A r <= c,  0 <= r <= u,  r integer.
struct IntegerProgram {
  RealVector w;
  RealVector psi;
  Matrix<double> a;
  RealVector c;
  CountVector upper;
  std::vector<TieKey> tie_order;  // empty: every variable ascending, minimize

  [[nodiscard]] int n_vars() const { return static_cast<int>(w.size()); }
  [[nodiscard]] int n_rows() const { return static_cast<int>(c.size()); }
  [[nodiscard]] double objective(const CountVector& r) const;
  [[nodiscard]] bool feasible(const CountVector& r, double tol = 1e-9) const;
};

enum class SolveStatus { exact, search_exhausted };

struct Solution {
  CountVector r;
  double objective{0.0};
  SolveStatus status{SolveStatus::exact};
  std::int64_t nodes{0};
};

struct SolverOptions {
  std::int64_t node_budget{10'000'000};
};

/// Finite upper bounds from the constraint rows. Rows with negative
/// coefficients contribute once the variables they subtract are bounded; the
/// sum of all rows is used as one more row. Throws ProgramError if some
/// variable stays unbounded.
CountVector derive_bounds(const Matrix<double>& a, const RealVector& c);

/// Fills `upper` from derive_bounds and checks the program's shape.
IntegerProgram make_program(RealVector w, RealVector psi, Matrix<double> a, RealVector c,
                            std::vector<TieKey> tie_order = {});

/// Exact minimizer by branch-and-bound with linear-relaxation bounds.
/// Among optimal solutions the one first in tie order is returned.
Solution solve(const IntegerProgram& program, const SolverOptions& options = {});

/// True when `x` precedes `y` in the program's tie order.
bool tie_better(const IntegerProgram& program, const CountVector& x, const CountVector& y);

void write_program(std::ostream& out, const IntegerProgram& program);
IntegerProgram read_program(std::istream& in);

}  // namespace qnet
