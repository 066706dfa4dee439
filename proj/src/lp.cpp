#include "lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qnet::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kDegenerateBeforeBland = 50;

class Tableau {
 public:
  Tableau(const LpProblem& p) {
    n_ = static_cast<int>(p.cost.size());
    m_ = static_cast<int>(p.b.size());
    const RealVector span = p.upper - p.lower;
    const RealVector rhs = p.b - p.a * p.lower;

    std::vector<int> negative_rows;
    for (int i = 0; i < m_; ++i) {
      if (rhs(i) < 0.0) negative_rows.push_back(i);
    }
    n_art_ = static_cast<int>(negative_rows.size());
    total_ = n_ + m_ + n_art_;

    t_ = Matrix<double>::Zero(m_, total_);
    t_.leftCols(n_) = p.a;
    t_.middleCols(n_, m_).setIdentity();
    upper_ = RealVector::Constant(total_, kInf);
    upper_.head(n_) = span;
    value_ = RealVector::Zero(total_);
    at_upper_.assign(static_cast<std::size_t>(total_), false);
    basis_.resize(static_cast<std::size_t>(m_));
    xb_ = rhs;
    for (int i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    for (int k = 0; k < n_art_; ++k) {
      const int i = negative_rows[static_cast<std::size_t>(k)];
      // Flip the row so the artificial starts basic at a positive value.
      t_.row(i) *= -1.0;
      xb_(i) = -xb_(i);
      t_(i, n_ + m_ + k) = 1.0;
      basis_[static_cast<std::size_t>(i)] = n_ + m_ + k;
    }
    for (int i = 0; i < m_; ++i) value_(basis_[static_cast<std::size_t>(i)]) = xb_(i);
    cost_ = p.cost;
  }

  // Returns false on iteration limit.
  bool run(const RealVector& cost) {
    // Reduced costs d = c - c_B^T T.
    RealVector cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
    d_ = cost - (cb.transpose() * t_).transpose();
    for (int i = 0; i < m_; ++i) d_(basis_[static_cast<std::size_t>(i)]) = 0.0;

    std::vector<char> is_basic(static_cast<std::size_t>(total_), 0);
    for (int b : basis_) is_basic[static_cast<std::size_t>(b)] = 1;

    const int max_iter = 50 * (m_ + total_) + 1000;
    int degenerate = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
      const bool bland = degenerate > kDegenerateBeforeBland;
      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (is_basic[static_cast<std::size_t>(j)] || upper_(j) <= 0.0) continue;
        const bool up = at_upper_[static_cast<std::size_t>(j)];
        const double score = up ? d_(j) : -d_(j);
        if (score > kCostTol) {
          if (bland) {
            enter = j;
            break;
          }
          if (score > best) {
            best = score;
            enter = j;
          }
        }
      }
      if (enter < 0) return true;

      const double dir = at_upper_[static_cast<std::size_t>(enter)] ? -1.0 : 1.0;
      double theta = upper_(enter);
      int leave = -1;
      bool leave_to_upper = false;
      for (int i = 0; i < m_; ++i) {
        const double delta = -dir * t_(i, enter);
        if (std::fabs(delta) <= kPivotTol) continue;
        const int bv = basis_[static_cast<std::size_t>(i)];
        double limit;
        bool to_upper;
        if (delta < 0.0) {
          limit = std::max(0.0, xb_(i)) / -delta;
          to_upper = false;
        } else {
          if (upper_(bv) == kInf) continue;
          limit = std::max(0.0, upper_(bv) - xb_(i)) / delta;
          to_upper = true;
        }
        const bool tie = leave >= 0 && limit <= theta + 1e-12 &&
                         (bland ? bv < basis_[static_cast<std::size_t>(leave)]
                                : std::fabs(t_(i, enter)) > std::fabs(t_(leave, enter)));
        if (limit < theta - 1e-12 || tie) {
          theta = limit;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (theta == kInf) return false;  // unbounded; cannot happen with finite structural bounds
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;

      // Move along the edge.
      for (int i = 0; i < m_; ++i) xb_(i) += -dir * t_(i, enter) * theta;
      value_(enter) += dir * theta;

      if (leave < 0) {
        // Bound flip.
        at_upper_[static_cast<std::size_t>(enter)] = !at_upper_[static_cast<std::size_t>(enter)];
        value_(enter) = at_upper_[static_cast<std::size_t>(enter)] ? upper_(enter) : 0.0;
        continue;
      }

      const int out = basis_[static_cast<std::size_t>(leave)];
      at_upper_[static_cast<std::size_t>(out)] = leave_to_upper;
      value_(out) = leave_to_upper ? upper_(out) : 0.0;
      is_basic[static_cast<std::size_t>(out)] = 0;
      is_basic[static_cast<std::size_t>(enter)] = 1;
      basis_[static_cast<std::size_t>(leave)] = enter;
      xb_(leave) = value_(enter);

      const double pivot = t_(leave, enter);
      t_.row(leave) /= pivot;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        const double f = t_(i, enter);
        if (f != 0.0) t_.row(i) -= f * t_.row(leave);
      }
      const double fd = d_(enter);
      if (fd != 0.0) d_ -= fd * t_.row(leave).transpose();
      d_(enter) = 0.0;
    }
    return false;
  }

  void sync_values() {
    for (int i = 0; i < m_; ++i) value_(basis_[static_cast<std::size_t>(i)]) = xb_(i);
  }

  int n_{0}, m_{0}, n_art_{0}, total_{0};
  Matrix<double> t_;
  RealVector upper_, value_, xb_, d_, cost_;
  std::vector<bool> at_upper_;
  std::vector<int> basis_;
};

}  // namespace

LpResult solve_lp(const LpProblem& p) {
  LpResult result;
  const int n = static_cast<int>(p.cost.size());
  if ((p.upper.array() < p.lower.array() - kFeasTol).any()) {
    result.status = LpStatus::infeasible;
    return result;
  }
  Tableau tab(p);

  if (tab.n_art_ > 0) {
    RealVector phase1 = RealVector::Zero(tab.total_);
    phase1.tail(tab.n_art_).setOnes();
    if (!tab.run(phase1)) {
      result.status = LpStatus::iteration_limit;
      return result;
    }
    tab.sync_values();
    if (tab.value_.tail(tab.n_art_).sum() > kFeasTol) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // Pin artificials at zero for phase 2.
    tab.upper_.tail(tab.n_art_).setZero();
  }

  RealVector phase2 = RealVector::Zero(tab.total_);
  phase2.head(n) = p.cost;
  if (!tab.run(phase2)) {
    result.status = LpStatus::iteration_limit;
    return result;
  }
  tab.sync_values();
  result.status = LpStatus::optimal;
  result.x = tab.value_.head(n) + p.lower;
  result.x = result.x.cwiseMax(p.lower).cwiseMin(p.upper);
  result.objective = p.cost.dot(result.x);
  return result;
}

}  // namespace qnet::detail
