#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qnet/dynamics.hpp"
#include "qnet/rng.hpp"
#include "qnet/solver.hpp"
#include "qnet/stochastic.hpp"
#include "qnet/topology.hpp"

namespace qnet {

enum class PolicyKind { greedy, mw_fi, mw_pi, mw_li, quad_fi, quad_pi, quad_li };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::greedy,  PolicyKind::mw_fi,   PolicyKind::mw_pi,
                                              PolicyKind::mw_li,   PolicyKind::quad_fi, PolicyKind::quad_pi,
                                              PolicyKind::quad_li};

std::string_view to_string(PolicyKind kind);
/// Throws ParameterError for unknown names.
PolicyKind parse_policy_kind(std::string_view name);

/// Everything: snapshot plus this step's exact arrivals, losses and demands.
struct FullInfo {
  SystemState state;
  StepRealization realization;
};

/// Snapshot plus long-run averages.
struct PartialInfo {
  SystemState state;
  RealVector alpha;
  RealVector beta;
  double eta{1.0};
};

struct QueueObservation {
  Count arrivals{0};
  Count losses{0};
  Count demands{0};
};

/// What node `node` sees: exact data on its connected queues, averages elsewhere.
struct LocalInfo {
  NodeIndex node{0};
  std::vector<int> connected;  // C^i, ascending
  std::map<int, QueueObservation> exact;
  SystemState state;
  RealVector alpha;
  RealVector beta;
  double eta{1.0};
};

using InfoSet = std::variant<FullInfo, PartialInfo, LocalInfo>;

FullInfo make_full_info(const SystemState& state, const StepRealization& realization);
PartialInfo make_partial_info(const NetworkModel& model, const SystemState& state);
LocalInfo make_local_info(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                          NodeIndex node);

/// Weights over [swaps | consumption]: zero on swaps, minus the expected
/// pending demand on each consumption slot.
RealVector build_weights(const NetworkModel& model, const InfoSet& info);

/// A = [-M~ ; -N~] and the expected-availability right-hand side.
std::pair<Matrix<double>, RealVector> build_constraints(const NetworkModel& model, const InfoSet& info);

/// Scheduling program for `info`; `quadratic` adds unit curvature on the
/// consumption block. Ties prefer more consumption (queue order), then fewer
/// swaps (transition order).
IntegerProgram build_program(const NetworkModel& model, const InfoSet& info, bool quadratic);

/// Consume what pending demand allows on user-pair queues, then swap at random
/// among enabled transitions until none is enabled, then consume again.
ScheduleVector greedy_decide(const NetworkModel& model, const SystemState& state, const StepRealization& realization,
                             RngStream& rng);

struct DecisionStats {
  std::int64_t programs{0};
  std::int64_t nodes{0};
  bool exhausted{false};
};

/// Greedy accepts FullInfo; mw_* and quad_* need the info variant of their
/// level. With LocalInfo the result holds only the operations the node owns:
/// swaps at the node, and consumption on queues where it is the smaller
/// endpoint. Throws ParameterError on a mismatch.
ScheduleVector decide(PolicyKind kind, const NetworkModel& model, const InfoSet& info, const SolverOptions& solver,
                      RngStream& rng, DecisionStats* stats = nullptr);

/// Sum of every node's local decision.
ScheduleVector decide_all_local(PolicyKind kind, const NetworkModel& model, const SystemState& state,
                                const StepRealization& realization, const SolverOptions& solver, RngStream& rng,
                                DecisionStats* stats = nullptr);

/// True when `node` executes operation `op`.
bool owns_operation(const NetworkModel& model, NodeIndex node, int op);

/// U(r) = (d+b)^T N~ r + r^T N~^T N~ r.
double drift_objective_U(const NetworkModel& model, const FullInfo& info, const ScheduleVector& schedule);

/// A policy sees the true state and realization and decides what to expose
/// to itself.
using PolicyFn = std::function<ScheduleVector(const NetworkModel&, const SystemState&, const StepRealization&,
                                              RngStream&, DecisionStats*)>;

PolicyFn make_policy(PolicyKind kind, SolverOptions solver = {});

}  // namespace qnet
