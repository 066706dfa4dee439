#include "qnet/dynamics.hpp"

#include <algorithm>

#include "qnet/errors.hpp"

namespace qnet {

namespace {

void check_dimensions(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                      const ScheduleVector& schedule) {
  const auto nq = static_cast<Eigen::Index>(model.n_queues());
  if (state.q.size() != nq || state.d.size() != nq || realization.arrivals.size() != nq ||
      realization.losses.size() != nq || realization.demands.size() != nq ||
      schedule.r.size() != model.n_operations() || schedule.n_transitions != model.n_transitions()) {
    throw ModelError("state, realization or schedule dimensions do not match the model");
  }
}

}  // namespace

SystemState evolve_ideal(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                         const ScheduleVector& schedule, Count* clamped_demand) {
  check_dimensions(model, state, realization, schedule);
  const CountVector r = schedule.r;
  SystemState next;
  next.t = state.t + 1;
  next.q = state.q - realization.losses + realization.arrivals + model.matrices.m_tilde.cast<Count>() * r;
  if ((next.q.array() < 0).any()) throw InfeasibleScheduleError("schedule drives an ebit queue negative");
  const CountVector raw = state.d + realization.demands + model.matrices.n_tilde.cast<Count>() * r;
  next.d = raw.cwiseMax(0);
  if (clamped_demand != nullptr) *clamped_demand = (next.d - raw).sum();
  return next;
}

std::pair<SystemState, ExecutionReport> execute(const NetworkModel& model, const SystemState& state,
                                                const StepRealization& realization, const ScheduleVector& schedule,
                                                RngStream& rng, std::vector<UnitAttempt>* trace) {
  check_dimensions(model, state, realization, schedule);
  if ((schedule.r.array() < 0).any()) throw ModelError("schedule has negative entries");

  CountVector q = state.q - realization.losses + realization.arrivals;
  CountVector d = state.d + realization.demands;
  const int nt = model.n_transitions();
  const int nops = model.n_operations();

  ExecutionReport report;
  report.executed = CountVector::Zero(nops);
  report.failed = CountVector::Zero(nops);

  std::vector<std::vector<int>> by_rank(static_cast<std::size_t>(model.ranks.max_rank + 1));
  for (int op = 0; op < nops; ++op) {
    auto& bucket = by_rank[static_cast<std::size_t>(model.operation_rank(op))];
    bucket.insert(bucket.end(), static_cast<std::size_t>(schedule.r(op)), op);
  }

  auto attempt = [&](int op) {
    if (op < nt) {
      const auto [p1, p2, child] = model.transition_queues[static_cast<std::size_t>(op)];
      if (q(p1) < 1 || q(p2) < 1) return false;
      --q(p1);
      --q(p2);
      ++q(child);
      return true;
    }
    const int e = op - nt;
    if (q(e) < 1 || d(e) < 1) return false;
    --q(e);
    --d(e);
    ++report.served;
    return true;
  };

  std::vector<int> waiting;
  for (std::size_t rank = 0; rank < by_rank.size(); ++rank) {
    auto& units = by_rank[rank];
    // A uniform permutation is the order induced by i.i.d. random timeouts.
    rng.shuffle(std::span<int>(units));
    // A unit whose inputs are missing waits for the rest of its rank and
    // fails once a full pass completes nothing.
    bool progress = true;
    while (!units.empty() && progress) {
      progress = false;
      waiting.clear();
      for (int op : units) {
        if (attempt(op)) {
          progress = true;
          ++report.executed(op);
          if (trace != nullptr) trace->push_back({op, static_cast<int>(rank), true});
        } else {
          waiting.push_back(op);
        }
      }
      units.swap(waiting);
    }
    for (int op : units) {
      ++report.failed(op);
      if (trace != nullptr) trace->push_back({op, static_cast<int>(rank), false});
    }
  }

  SystemState next{state.t + 1, std::move(q), std::move(d)};
  return {std::move(next), std::move(report)};
}

bool feasible(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
              const ScheduleVector& schedule) {
  check_dimensions(model, state, realization, schedule);
  if ((schedule.r.array() < 0).any()) return false;
  const CountVector ebits_out = -(model.matrices.m_tilde.cast<Count>() * schedule.r);
  const CountVector demand_out = -(model.matrices.n_tilde.cast<Count>() * schedule.r);
  const CountVector available = state.q - realization.losses + realization.arrivals;
  const CountVector pending = state.d + realization.demands;
  return (ebits_out.array() <= available.array()).all() && (demand_out.array() <= pending.array()).all();
}

}  // namespace qnet
