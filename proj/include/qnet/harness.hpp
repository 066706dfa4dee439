#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qnet/dynamics.hpp"
#include "qnet/policies.hpp"
#include "qnet/solver.hpp"
#include "qnet/topology.hpp"

namespace qnet {

enum class StabilityLabel { stable, unstable, ambiguous, skipped };

std::string_view to_string(StabilityLabel label);
StabilityLabel parse_stability_label(std::string_view text);

struct StabilityThresholds {
  double min_zero_returns{3.0};  // mean zero visits of total demand, last half
  double slope{0.01};            // demands per step
  bool operator==(const StabilityThresholds&) const = default;
};

/// Stable when the mean count of zero visits of total demand over the last
/// half of each series reaches the threshold; unstable when the least-squares
/// slope over the last half exceeds the threshold in every run; ambiguous
/// otherwise. Throws ClassificationError for an empty set or series shorter
/// than 10 steps.
StabilityLabel classify_stability(std::span<const std::vector<Count>> series, const StabilityThresholds& thresholds);

/// Least-squares slope of the second half of `series`.
double tail_slope(const std::vector<Count>& series);

struct StepRecord {
  Count t{0};
  StepRealization realization;
  ScheduleVector decision;
  ExecutionReport report;
  DecisionStats stats;
};

/// One time step: sample, decide, execute. Sub-streams of `step_rng` are
/// keyed by purpose.
std::pair<SystemState, StepRecord> run_step(const NetworkModel& model, const SystemState& state,
                                            const PolicyFn& policy, const RngStream& step_rng);

/// Same, with the realization given instead of sampled.
std::pair<SystemState, StepRecord> run_step(const NetworkModel& model, const SystemState& state,
                                            const StepRealization& realization, const PolicyFn& policy,
                                            const RngStream& step_rng);

struct RunResult {
  std::vector<Count> total_demand;  // sum of d after each step
  double avg_backlog{0.0};
  Count max_excursion{0};
  Count arrivals{0};
  Count served{0};
  Count final_backlog{0};
  Count clamped{0};
  Count failed_ops{0};
  std::int64_t solver_nodes{0};
  bool solver_exhausted{false};
};

using StepObserver = std::function<void(const StepRecord&, const SystemState& next)>;

/// Runs `n_steps` from the empty state with streams keyed by (seed, run).
/// Checks arrivals == served + final backlog + clamped and throws Error if
/// the ledger does not balance.
RunResult run_simulation(const NetworkModel& model, const PolicyFn& policy, Count n_steps, std::uint64_t seed,
                         std::uint64_t run, const StepObserver& observer = {});

struct SimConfig {
  NetworkGraph graph;
  double eta{1.0};
  std::vector<std::pair<std::string, std::string>> fixed_pairs;  // one or two
  Count n_steps{5000};
  int n_runs{10};
  std::uint64_t seed{0};
  StabilityThresholds thresholds;
  SolverOptions solver;
  int jobs{1};
};

struct SweepConfig {
  std::vector<double> beta1;
  std::vector<double> beta2{0.0};
  int parasitic_count{8};
  double parasitic_load{0.0};
  double route_removal_prob{0.0};
  bool pareto_skip{true};
};

struct CellResult {
  int i{0};
  int j{0};
  double beta1{0.0};
  double beta2{0.0};
  StabilityLabel label{StabilityLabel::skipped};
  double avg_backlog{0.0};
  Count max_excursion{0};
  Count served_total{0};
  Count failed_ops{0};
  std::vector<RunResult> runs;  // empty for skipped or cached cells
};

/// Node pairs for run `run`: the fixed pairs, then `parasitic_count` distinct
/// pairs drawn uniformly from the remaining node pairs.
std::vector<NodePair> draw_pairs(const NetworkGraph& graph, const std::vector<NodePair>& fixed, int parasitic_count,
                                 std::uint64_t seed, std::uint64_t run);

/// Routed model for run `run` with zero demand rates.
NetworkModel build_run_model(const SimConfig& sim, const SweepConfig& sweep, std::uint64_t run);

/// Rates for the model's pairs: the fixed pairs get (beta1, beta2), parasitic
/// pairs get the load.
std::vector<double> cell_rates(const NetworkModel& model, double beta1, double beta2, double load);

struct SweepHooks {
  /// Result of an earlier, interrupted sweep, if any.
  std::function<std::optional<CellResult>(int i, int j)> cached;
  /// Called once per finished or skipped cell, from the orchestrating thread.
  std::function<void(const CellResult&)> completed;
  /// Per-step observer factory for (cell, run); may return an empty function.
  std::function<StepObserver(int i, int j, int run)> observer;
  /// Stop after evaluating this many new cells (leaving the sweep incomplete).
  std::optional<int> max_cells;
};

/// Evaluates the (beta1 x beta2) grid in anti-diagonal waves so that every
/// dominated cell is decided before any cell dominating it. Returns cells in
/// row-major order; cells never reached because of `max_cells` are absent.
std::vector<CellResult> run_sweep(const SweepConfig& sweep, const SimConfig& sim, PolicyKind kind,
                                  const SweepHooks& hooks = {});
std::vector<CellResult> run_sweep(const SweepConfig& sweep, const SimConfig& sim, const PolicyFn& policy,
                                  const SweepHooks& hooks = {});

/// Runs `tasks` on up to `jobs` threads.
void parallel_for(std::size_t tasks, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace qnet
