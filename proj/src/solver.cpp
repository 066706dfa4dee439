#include "qnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "lp.hpp"
#include "qnet/errors.hpp"

namespace qnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntegralTol = 1e-6;
constexpr Count kMaxSegments = 48;

std::vector<TieKey> expanded_order(const IntegerProgram& p) {
  std::vector<TieKey> order = p.tie_order;
  std::vector<char> seen(static_cast<std::size_t>(p.n_vars()), 0);
  for (const auto& k : order) seen[static_cast<std::size_t>(k.var)] = 1;
  for (int v = 0; v < p.n_vars(); ++v) {
    if (!seen[static_cast<std::size_t>(v)]) order.push_back({v, false});
  }
  return order;
}

double objective_tol(double reference) { return 1e-7 * std::max(1.0, std::fabs(reference)); }

// min over integers r in [lo, hi] of w r + psi r^2.
double box_minimum(double w, double psi, Count lo, Count hi) {
  auto f = [&](Count r) {
    const auto x = static_cast<double>(r);
    return w * x + psi * x * x;
  };
  if (psi <= 0.0) return w >= 0.0 ? f(lo) : f(hi);
  const auto centre = static_cast<Count>(std::floor(-w / (2.0 * psi)));
  double best = std::min(f(lo), f(hi));
  for (Count r : {centre, centre + 1}) {
    if (r >= lo && r <= hi) best = std::min(best, f(r));
  }
  return best;
}

struct Node {
  CountVector lo;
  CountVector hi;
};

class BranchAndBound {
 public:
  BranchAndBound(const IntegerProgram& p, const SolverOptions& options)
      : p_(p), options_(options), order_(expanded_order(p)) {}

  Solution run() {
    const int n = p_.n_vars();
    Solution sol;
    sol.r = CountVector::Zero(n);
    if (n == 0) {
      sol.objective = 0.0;
      return sol;
    }
    incumbent_ = CountVector::Zero(n);
    has_incumbent_ = p_.feasible(incumbent_);
    incumbent_obj_ = has_incumbent_ ? p_.objective(incumbent_) : kInf;

    std::vector<Node> stack;
    stack.push_back({CountVector::Zero(n), p_.upper});
    while (!stack.empty()) {
      if (nodes_ >= options_.node_budget) {
        exhausted_ = true;
        break;
      }
      Node node = std::move(stack.back());
      stack.pop_back();
      ++nodes_;
      process(node, stack);
    }

    if (exhausted_) {
      spdlog::warn("solver node budget of {} exhausted; returning best solution found", options_.node_budget);
      sol.status = SolveStatus::search_exhausted;
    }
    if (has_incumbent_) {
      sol.r = incumbent_;
      sol.objective = incumbent_obj_;
    } else {
      sol.objective = p_.objective(sol.r);
    }
    sol.nodes = nodes_;
    return sol;
  }

 private:
  bool lex_possible(const Node& node) const {
    for (const auto& k : order_) {
      const Count best = k.maximize ? node.hi(k.var) : node.lo(k.var);
      const Count inc = incumbent_(k.var);
      if (best != inc) return k.maximize ? best > inc : best < inc;
    }
    return false;
  }

  bool can_improve(double bound, const Node& node) const {
    if (!has_incumbent_) return true;
    const double tol = objective_tol(incumbent_obj_);
    if (bound < incumbent_obj_ - tol) return true;
    if (bound > incumbent_obj_ + tol) return false;
    return lex_possible(node);
  }

  void offer(const CountVector& r) {
    if (!p_.feasible(r)) return;
    const double obj = p_.objective(r);
    if (!has_incumbent_) {
      incumbent_ = r;
      incumbent_obj_ = obj;
      has_incumbent_ = true;
      return;
    }
    const double tol = objective_tol(incumbent_obj_);
    if (obj < incumbent_obj_ - tol || (obj <= incumbent_obj_ + tol && tie_better(p_, r, incumbent_))) {
      incumbent_ = r;
      incumbent_obj_ = obj;
    }
  }

  // Splits on the first free variable in tie order: its preferred value
  // alone, then the rest of its range.
  void split_first_free(const Node& node, std::vector<Node>& stack) const {
    for (const auto& k : order_) {
      const int v = k.var;
      if (node.lo(v) == node.hi(v)) continue;
      Node best = node;
      Node rest = node;
      if (k.maximize) {
        best.lo(v) = node.hi(v);
        rest.hi(v) = node.hi(v) - 1;
      } else {
        best.hi(v) = node.lo(v);
        rest.lo(v) = node.lo(v) + 1;
      }
      stack.push_back(std::move(rest));
      stack.push_back(std::move(best));
      return;
    }
  }

  void process(const Node& node, std::vector<Node>& stack) {
    const int n = p_.n_vars();
    const int m = p_.n_rows();

    double box_bound = 0.0;
    for (int v = 0; v < n; ++v) box_bound += box_minimum(p_.w(v), p_.psi(v), node.lo(v), node.hi(v));
    if (!can_improve(box_bound, node)) return;

    std::vector<int> free_vars;
    double base = 0.0;
    for (int v = 0; v < n; ++v) {
      const auto lo = static_cast<double>(node.lo(v));
      base += p_.w(v) * lo + p_.psi(v) * lo * lo;
      if (node.lo(v) < node.hi(v)) free_vars.push_back(v);
    }
    const RealVector residual = p_.c - p_.a * node.lo.cast<double>();

    std::vector<int> rows;
    for (int i = 0; i < m; ++i) {
      bool touches = false;
      for (int v : free_vars) touches = touches || p_.a(i, v) != 0.0;
      if (touches) {
        rows.push_back(i);
      } else if (residual(i) < -1e-9) {
        return;
      }
    }
    if (free_vars.empty()) {
      offer(node.lo);
      return;
    }

    // Columns: one per linear variable, unit segments for quadratic ones.
    std::vector<int> col_var;
    std::vector<double> col_cost, col_upper;
    for (int v : free_vars) {
      const Count range = node.hi(v) - node.lo(v);
      if (p_.psi(v) == 0.0) {
        col_var.push_back(v);
        col_cost.push_back(p_.w(v));
        col_upper.push_back(static_cast<double>(range));
        continue;
      }
      const Count segments = std::min(range, kMaxSegments);
      for (Count s = 1; s <= segments; ++s) {
        const auto k = static_cast<double>(node.lo(v) + s);
        col_var.push_back(v);
        col_cost.push_back(p_.w(v) + p_.psi(v) * (2.0 * k - 1.0));
        col_upper.push_back(1.0);
      }
      if (range > segments) {
        const auto k = static_cast<double>(node.lo(v) + segments + 1);
        col_var.push_back(v);
        col_cost.push_back(p_.w(v) + p_.psi(v) * (2.0 * k - 1.0));
        col_upper.push_back(static_cast<double>(range - segments));
      }
    }
    const int cols = static_cast<int>(col_var.size());
    detail::LpProblem lp;
    lp.cost = Eigen::Map<RealVector>(col_cost.data(), cols);
    lp.upper = Eigen::Map<RealVector>(col_upper.data(), cols);
    lp.lower = RealVector::Zero(cols);
    lp.a.resize(static_cast<Eigen::Index>(rows.size()), cols);
    lp.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
      const auto r = static_cast<Eigen::Index>(ri);
      lp.b(r) = residual(rows[ri]);
      for (int j = 0; j < cols; ++j) lp.a(r, j) = p_.a(rows[ri], col_var[static_cast<std::size_t>(j)]);
    }

    const detail::LpResult res = detail::solve_lp(lp);
    if (res.status == detail::LpStatus::infeasible) return;
    if (res.status == detail::LpStatus::iteration_limit) {
      split_first_free(node, stack);
      return;
    }
    const double bound = base + res.objective;
    if (!can_improve(bound, node)) return;

    RealVector x = node.lo.cast<double>();
    for (int j = 0; j < cols; ++j) x(col_var[static_cast<std::size_t>(j)]) += res.x(j);

    for (const auto& k : order_) {
      const double xv = x(k.var);
      if (std::fabs(xv - std::round(xv)) <= kIntegralTol) continue;
      const auto floor_v = static_cast<Count>(std::floor(xv));
      Node down = node;
      Node up = node;
      down.hi(k.var) = floor_v;
      up.lo(k.var) = floor_v + 1;
      if (k.maximize) {
        stack.push_back(std::move(down));
        stack.push_back(std::move(up));
      } else {
        stack.push_back(std::move(up));
        stack.push_back(std::move(down));
      }
      return;
    }

    CountVector rounded(n);
    for (int v = 0; v < n; ++v) rounded(v) = std::llround(x(v));
    offer(rounded);
    if (can_improve(bound, node)) split_first_free(node, stack);
  }

  const IntegerProgram& p_;
  SolverOptions options_;
  std::vector<TieKey> order_;
  CountVector incumbent_;
  double incumbent_obj_{kInf};
  bool has_incumbent_{false};
  bool exhausted_{false};
  std::int64_t nodes_{0};
};

void check_shape(const IntegerProgram& p) {
  const int n = p.n_vars();
  if (p.psi.size() != n || p.a.cols() != n || p.a.rows() != p.c.size() || p.upper.size() != n) {
    throw ProgramError("program dimensions are inconsistent");
  }
  if ((p.psi.array() < 0.0).any()) throw ProgramError("quadratic coefficients must be nonnegative");
  if ((p.upper.array() < 0).any()) throw ProgramError("upper bounds must be nonnegative");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& k : p.tie_order) {
    if (k.var < 0 || k.var >= n || seen[static_cast<std::size_t>(k.var)]) {
      throw ProgramError("tie order must list distinct variables");
    }
    seen[static_cast<std::size_t>(k.var)] = 1;
  }
}

}  // namespace

double IntegerProgram::objective(const CountVector& r) const {
  double total = 0.0;
  for (int v = 0; v < n_vars(); ++v) {
    const auto x = static_cast<double>(r(v));
    total += w(v) * x + psi(v) * x * x;
  }
  return total;
}

bool IntegerProgram::feasible(const CountVector& r, double tol) const {
  if (r.size() != n_vars()) return false;
  if ((r.array() < 0).any() || (r.array() > upper.array()).any()) return false;
  const RealVector lhs = a * r.cast<double>();
  return ((lhs - c).array() <= tol).all();
}

CountVector derive_bounds(const Matrix<double>& a, const RealVector& c) {
  const auto n = a.cols();
  if (a.rows() != c.size()) throw ProgramError("constraint matrix and rhs disagree in size");
  Matrix<double> rows(a.rows() + 1, n);
  RealVector rhs(c.size() + 1);
  rows.topRows(a.rows()) = a;
  rows.row(a.rows()) = a.colwise().sum();
  rhs.head(c.size()) = c;
  rhs(c.size()) = c.sum();

  RealVector bound = RealVector::Constant(n, kInf);
  for (Eigen::Index pass = 0; pass <= n + 1; ++pass) {
    bool changed = false;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      // Positive coefficients never enter the slack, so it is shared by every
      // variable the row bounds.
      double slack = rhs(i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (rows(i, j) < 0.0) slack -= rows(i, j) * bound(j);
      }
      if (!std::isfinite(slack)) continue;
      for (Eigen::Index v = 0; v < n; ++v) {
        const double coeff = rows(i, v);
        if (coeff <= 0.0) continue;
        const double candidate = std::max(0.0, std::floor(slack / coeff + 1e-9));
        if (candidate < bound(v)) {
          bound(v) = candidate;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  CountVector upper(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (!std::isfinite(bound(v))) {
      throw ProgramError("variable " + std::to_string(v) + " has no finite upper bound");
    }
    upper(v) = static_cast<Count>(bound(v));
  }
  return upper;
}

IntegerProgram make_program(RealVector w, RealVector psi, Matrix<double> a, RealVector c,
                            std::vector<TieKey> tie_order) {
  IntegerProgram p;
  p.w = std::move(w);
  p.psi = std::move(psi);
  p.a = std::move(a);
  p.c = std::move(c);
  p.tie_order = std::move(tie_order);
  p.upper = CountVector::Zero(p.n_vars());
  check_shape(p);
  p.upper = derive_bounds(p.a, p.c);
  return p;
}

bool tie_better(const IntegerProgram& program, const CountVector& x, const CountVector& y) {
  for (const auto& k : expanded_order(program)) {
    if (x(k.var) != y(k.var)) return k.maximize ? x(k.var) > y(k.var) : x(k.var) < y(k.var);
  }
  return false;
}

Solution solve(const IntegerProgram& program, const SolverOptions& options) {
  check_shape(program);
  return BranchAndBound(program, options).run();
}

void write_program(std::ostream& out, const IntegerProgram& p) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "vars " << p.n_vars() << " rows " << p.n_rows() << '\n';
  out << "w";
  for (int v = 0; v < p.n_vars(); ++v) out << ' ' << p.w(v);
  out << "\npsi";
  for (int v = 0; v < p.n_vars(); ++v) out << ' ' << p.psi(v);
  out << "\nA\n";
  for (int i = 0; i < p.n_rows(); ++i) {
    for (int v = 0; v < p.n_vars(); ++v) out << (v ? " " : "") << p.a(i, v);
    out << '\n';
  }
  out << "c";
  for (int i = 0; i < p.n_rows(); ++i) out << ' ' << p.c(i);
  out << "\nu";
  for (int v = 0; v < p.n_vars(); ++v) out << ' ' << p.upper(v);
  out << "\ntie";
  for (const auto& k : p.tie_order) out << ' ' << k.var << (k.maximize ? '+' : '-');
  out << '\n';
  out.flags(flags);
  out.precision(precision);
}

IntegerProgram read_program(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw ProgramError("program text: expected '" + word + "'");
  };
  auto number = [&]() {
    std::string token;
    if (!(in >> token)) throw ProgramError("program text: unexpected end of input");
    try {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw ProgramError("program text: bad number '" + token + "'");
      return value;
    } catch (const std::logic_error&) {
      throw ProgramError("program text: bad number '" + token + "'");
    }
  };
  int n = 0;
  int m = 0;
  expect("vars");
  if (!(in >> n) || n < 0) throw ProgramError("program text: bad variable count");
  expect("rows");
  if (!(in >> m) || m < 0) throw ProgramError("program text: bad row count");

  IntegerProgram p;
  p.w.resize(n);
  p.psi.resize(n);
  p.a.resize(m, n);
  p.c.resize(m);
  p.upper.resize(n);
  expect("w");
  for (int v = 0; v < n; ++v) p.w(v) = number();
  expect("psi");
  for (int v = 0; v < n; ++v) p.psi(v) = number();
  expect("A");
  for (int i = 0; i < m; ++i) {
    for (int v = 0; v < n; ++v) p.a(i, v) = number();
  }
  expect("c");
  for (int i = 0; i < m; ++i) p.c(i) = number();
  expect("u");
  for (int v = 0; v < n; ++v) {
    const double u = number();
    if (u != std::floor(u)) throw ProgramError("program text: bounds must be integers");
    p.upper(v) = static_cast<Count>(u);
  }
  expect("tie");
  std::string rest;
  std::getline(in, rest);
  std::istringstream tokens(rest);
  std::string token;
  while (tokens >> token) {
    const char dir = token.back();
    if (dir != '+' && dir != '-') throw ProgramError("program text: bad tie key '" + token + "'");
    p.tie_order.push_back({std::stoi(token.substr(0, token.size() - 1)), dir == '+'});
  }
  check_shape(p);
  return p;
}

}  // namespace qnet
