#pragma once

#include <vector>

#include "qnet/rng.hpp"
#include "qnet/stochastic.hpp"
#include "qnet/topology.hpp"
#include "qnet/types.hpp"

namespace qnet {

struct SystemState {
  Count t{0};
  CountVector q;  // ebit backlogs
  CountVector d;  // demand backlogs

  static SystemState empty(int n_queues) { return {0, CountVector::Zero(n_queues), CountVector::Zero(n_queues)}; }
};

/// Scheduling decision r(t): swap counts per transition followed by
/// consumption counts per queue.
struct ScheduleVector {
  CountVector r;
  int n_transitions{0};

  static ScheduleVector zero(const NetworkModel& model) {
    return {CountVector::Zero(model.n_operations()), model.n_transitions()};
  }

  [[nodiscard]] auto swaps() { return r.head(n_transitions); }
  [[nodiscard]] auto swaps() const { return r.head(n_transitions); }
  [[nodiscard]] auto consumption() { return r.tail(r.size() - n_transitions); }
  [[nodiscard]] auto consumption() const { return r.tail(r.size() - n_transitions); }
};

struct ExecutionReport {
  CountVector executed;  // per operation
  CountVector failed;    // per operation; ordered - executed
  Count served{0};       // demands served this step
  Count clamped_demand{0};

  [[nodiscard]] Count total_failed() const { return failed.sum(); }
};

/// One unit operation as attempted by the execution engine.
struct UnitAttempt {
  int op;
  int rank;
  bool ok;
};

/// q(t+1) = q - l + a + M~ r,  d(t+1) = (d + b + N~ r)^+.
/// Throws InfeasibleScheduleError if any ebit backlog would go negative.
SystemState evolve_ideal(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                         const ScheduleVector& schedule, Count* clamped_demand = nullptr);

/// Executes `schedule` against the end-of-step backlog one unit operation at a
/// time: ranks ascending, random order within a rank. A swap needs one ebit
/// in each parent queue; a consumption needs one ebit and one pending demand.
/// A unit that cannot run yet is retried after the rest of its rank; orders
/// still unmet when a rank stops making progress are counted as failed.
std::pair<SystemState, ExecutionReport> execute(const NetworkModel& model, const SystemState& state,
                                                const StepRealization& realization, const ScheduleVector& schedule,
                                                RngStream& rng, std::vector<UnitAttempt>* trace = nullptr);

/// -M~ r <= q - l + a  and  -N~ r <= d + b  (and r >= 0).
bool feasible(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
              const ScheduleVector& schedule);

}  // namespace qnet
