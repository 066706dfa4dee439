#pragma once

#include "qnet/types.hpp"

namespace qnet::detail {

// min cost . x  s.t.  A x <= b,  lower <= x <= upper (all bounds finite).
struct LpProblem {
  RealVector cost;
  Matrix<double> a;
  RealVector b;
  RealVector lower;
  RealVector upper;
};

enum class LpStatus { optimal, infeasible, iteration_limit };

struct LpResult {
  LpStatus status{LpStatus::infeasible};
  double objective{0.0};
  RealVector x;
};

// Dense two-phase bounded-variable primal simplex. Dantzig pricing with a
// fallback to Bland's rule after a run of degenerate pivots.
LpResult solve_lp(const LpProblem& problem);

}  // namespace qnet::detail
