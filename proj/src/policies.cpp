#include "qnet/policies.hpp"

#include <algorithm>
#include <array>

#include "qnet/errors.hpp"

namespace qnet {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 7> kNames{{
    {PolicyKind::greedy, "greedy"},
    {PolicyKind::mw_fi, "mw_fi"},
    {PolicyKind::mw_pi, "mw_pi"},
    {PolicyKind::mw_li, "mw_li"},
    {PolicyKind::quad_fi, "quad_fi"},
    {PolicyKind::quad_pi, "quad_pi"},
    {PolicyKind::quad_li, "quad_li"},
}};

enum class Level { none, full, partial, local };

Level level_of(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::greedy: return Level::none;
    case PolicyKind::mw_fi:
    case PolicyKind::quad_fi: return Level::full;
    case PolicyKind::mw_pi:
    case PolicyKind::quad_pi: return Level::partial;
    case PolicyKind::mw_li:
    case PolicyKind::quad_li: return Level::local;
  }
  return Level::none;
}

bool is_quadratic(PolicyKind kind) {
  return kind == PolicyKind::quad_fi || kind == PolicyKind::quad_pi || kind == PolicyKind::quad_li;
}

// Expected ebits available and demand pending at the end of the step.
struct Expectation {
  RealVector ebits;
  RealVector demand;
};

Expectation expectation(const NetworkModel& model, const InfoSet& info) {
  const int n = model.n_queues();
  Expectation e{RealVector(n), RealVector(n)};
  std::visit(
      [&](const auto& in) {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, FullInfo>) {
          const auto& s = in.state;
          const auto& x = in.realization;
          e.ebits = (s.q - x.losses + x.arrivals).template cast<double>();
          e.demand = (s.d + x.demands).template cast<double>();
        } else {
          const RealVector q = in.state.q.template cast<double>();
          e.ebits = in.eta * q + in.alpha;
          e.demand = in.state.d.template cast<double>() + in.beta;
          if constexpr (std::is_same_v<T, LocalInfo>) {
            for (const auto& [queue, obs] : in.exact) {
              e.ebits(queue) = static_cast<double>(in.state.q(queue) - obs.losses + obs.arrivals);
              e.demand(queue) = static_cast<double>(in.state.d(queue) + obs.demands);
            }
          }
        }
      },
      info);
  return e;
}

void check_info(const NetworkModel& model, const InfoSet& info) {
  const int n = model.n_queues();
  std::visit(
      [&](const auto& in) {
        if (in.state.q.size() != n || in.state.d.size() != n) {
          throw ParameterError("info state does not match the model's queue count");
        }
      },
      info);
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw ParameterError("unknown policy '" + std::string(name) + "'");
}

FullInfo make_full_info(const SystemState& state, const StepRealization& realization) {
  return {state, realization};
}

PartialInfo make_partial_info(const NetworkModel& model, const SystemState& state) {
  return {state, model.arrival_rate, model.demand_rate, model.eta};
}

LocalInfo make_local_info(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                          NodeIndex node) {
  LocalInfo info;
  info.node = node;
  info.connected = model.queues.incident(node);
  for (int queue : info.connected) {
    info.exact[queue] = {realization.arrivals(queue), realization.losses(queue), realization.demands(queue)};
  }
  info.state = state;
  info.alpha = model.arrival_rate;
  info.beta = model.demand_rate;
  info.eta = model.eta;
  return info;
}

RealVector build_weights(const NetworkModel& model, const InfoSet& info) {
  check_info(model, info);
  RealVector w = RealVector::Zero(model.n_operations());
  w.tail(model.n_queues()) = -expectation(model, info).demand;
  return w;
}

std::pair<Matrix<double>, RealVector> build_constraints(const NetworkModel& model, const InfoSet& info) {
  check_info(model, info);
  const int n = model.n_queues();
  const int ops = model.n_operations();
  Matrix<double> a(2 * n, ops);
  a.topRows(n) = -model.matrices.m_tilde.cast<double>();
  a.bottomRows(n) = -model.matrices.n_tilde.cast<double>();
  const Expectation e = expectation(model, info);
  RealVector c(2 * n);
  c << e.ebits, e.demand;
  return {std::move(a), std::move(c)};
}

IntegerProgram build_program(const NetworkModel& model, const InfoSet& info, bool quadratic) {
  auto [a, c] = build_constraints(model, info);
  RealVector w = build_weights(model, info);
  RealVector psi = RealVector::Zero(model.n_operations());
  if (quadratic) psi.tail(model.n_queues()).setOnes();
  std::vector<TieKey> order;
  order.reserve(static_cast<std::size_t>(model.n_operations()));
  for (int q = 0; q < model.n_queues(); ++q) order.push_back({model.consumption_op(q), true});
  for (int t = 0; t < model.n_transitions(); ++t) order.push_back({t, false});
  return make_program(std::move(w), std::move(psi), std::move(a), std::move(c), std::move(order));
}

ScheduleVector greedy_decide(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                             RngStream& rng) {
  ScheduleVector out = ScheduleVector::zero(model);
  CountVector avail = state.q - realization.losses + realization.arrivals;
  CountVector pending = state.d + realization.demands;

  auto consume = [&] {
    for (int q = 0; q < model.n_queues(); ++q) {
      if (!model.user_pair_queue[static_cast<std::size_t>(q)]) continue;
      const Count c = std::min(avail(q), pending(q));
      if (c <= 0) continue;
      out.r(model.consumption_op(q)) += c;
      avail(q) -= c;
      pending(q) -= c;
    }
  };

  consume();
  std::vector<int> enabled;
  for (;;) {
    enabled.clear();
    for (int t = 0; t < model.n_transitions(); ++t) {
      const auto& tq = model.transition_queues[static_cast<std::size_t>(t)];
      if (avail(tq[0]) >= 1 && avail(tq[1]) >= 1) enabled.push_back(t);
    }
    if (enabled.empty()) break;
    const int t = enabled[static_cast<std::size_t>(rng.uniform_int(enabled.size()))];
    const auto& tq = model.transition_queues[static_cast<std::size_t>(t)];
    --avail(tq[0]);
    --avail(tq[1]);
    ++avail(tq[2]);
    ++out.r(t);
  }
  consume();
  return out;
}

bool owns_operation(const NetworkModel& model, NodeIndex node, int op) {
  if (op < model.n_transitions()) return model.transitions[static_cast<std::size_t>(op)].swap == node;
  return model.queues.pair(op - model.n_transitions()).u == node;
}

ScheduleVector decide(PolicyKind kind, const NetworkModel& model, const InfoSet& info, const SolverOptions& solver,
                      RngStream& rng, DecisionStats* stats) {
  const Level level = level_of(kind);
  const bool matches = (level == Level::none && std::holds_alternative<FullInfo>(info)) ||
                       (level == Level::full && std::holds_alternative<FullInfo>(info)) ||
                       (level == Level::partial && std::holds_alternative<PartialInfo>(info)) ||
                       (level == Level::local && std::holds_alternative<LocalInfo>(info));
  if (!matches) throw ParameterError("information set does not match policy " + std::string(to_string(kind)));

  if (level == Level::none) {
    const auto& full = std::get<FullInfo>(info);
    return greedy_decide(model, full.state, full.realization, rng);
  }

  ScheduleVector out = ScheduleVector::zero(model);
  if (model.n_operations() == 0) return out;
  const IntegerProgram program = build_program(model, info, is_quadratic(kind));
  const Solution sol = solve(program, solver);
  if (stats) {
    ++stats->programs;
    stats->nodes += sol.nodes;
    stats->exhausted = stats->exhausted || sol.status == SolveStatus::search_exhausted;
  }
  out.r = sol.r;
  if (level == Level::local) {
    const NodeIndex node = std::get<LocalInfo>(info).node;
    for (int op = 0; op < model.n_operations(); ++op) {
      if (!owns_operation(model, node, op)) out.r(op) = 0;
    }
  }
  return out;
}

ScheduleVector decide_all_local(PolicyKind kind, const NetworkModel& model, const SystemState& state,
                                const StepRealization& realization, const SolverOptions& solver, RngStream& rng,
                                DecisionStats* stats) {
  ScheduleVector out = ScheduleVector::zero(model);
  for (NodeIndex node = 0; node < model.graph.node_count(); ++node) {
    bool owns_any = false;
    for (int op = 0; op < model.n_operations() && !owns_any; ++op) owns_any = owns_operation(model, node, op);
    if (!owns_any) continue;
    out.r += decide(kind, model, make_local_info(model, state, realization, node), solver, rng, stats).r;
  }
  return out;
}

double drift_objective_U(const NetworkModel& model, const FullInfo& info, const ScheduleVector& schedule) {
  const RealVector pending = (info.state.d + info.realization.demands).cast<double>();
  const RealVector nr = (model.matrices.n_tilde.cast<Count>() * schedule.r).cast<double>();
  return pending.dot(nr) + nr.squaredNorm();
}

PolicyFn make_policy(PolicyKind kind, SolverOptions solver) {
  return [kind, solver](const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                        RngStream& rng, DecisionStats* stats) {
    switch (level_of(kind)) {
      case Level::none:
      case Level::full: return decide(kind, model, make_full_info(state, realization), solver, rng, stats);
      case Level::partial: return decide(kind, model, make_partial_info(model, state), solver, rng, stats);
      case Level::local: return decide_all_local(kind, model, state, realization, solver, rng, stats);
    }
    return ScheduleVector::zero(model);
  };
}

}  // namespace qnet
