#include "qnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <spdlog/spdlog.h>

#include "qnet/errors.hpp"
#include "qnet/stochastic.hpp"

namespace qnet {

std::string_view to_string(StabilityLabel label) {
  switch (label) {
    case StabilityLabel::stable: return "stable";
    case StabilityLabel::unstable: return "unstable";
    case StabilityLabel::ambiguous: return "ambiguous";
    case StabilityLabel::skipped: return "skipped";
  }
  return "unknown";
}

StabilityLabel parse_stability_label(std::string_view text) {
  for (auto label : {StabilityLabel::stable, StabilityLabel::unstable, StabilityLabel::ambiguous,
                     StabilityLabel::skipped}) {
    if (to_string(label) == text) return label;
  }
  throw ParameterError("unknown stability label '" + std::string(text) + "'");
}

double tail_slope(const std::vector<Count>& series) {
  const std::size_t start = series.size() / 2;
  const auto m = static_cast<double>(series.size() - start);
  if (m < 2.0) return 0.0;
  const double x_mean = (m - 1.0) / 2.0;
  double y_mean = 0.0;
  for (std::size_t k = start; k < series.size(); ++k) y_mean += static_cast<double>(series[k]);
  y_mean /= m;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = start; k < series.size(); ++k) {
    const double x = static_cast<double>(k - start) - x_mean;
    sxy += x * (static_cast<double>(series[k]) - y_mean);
    sxx += x * x;
  }
  return sxy / sxx;
}

StabilityLabel classify_stability(std::span<const std::vector<Count>> series, const StabilityThresholds& thresholds) {
  if (series.empty()) throw ClassificationError("no series to classify");
  double zero_visits = 0.0;
  bool all_rising = true;
  for (const auto& s : series) {
    if (s.size() < 10) throw ClassificationError("series shorter than 10 steps");
    const auto tail = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
    zero_visits += static_cast<double>(std::count(tail, s.end(), Count{0}));
    all_rising = all_rising && tail_slope(s) > thresholds.slope;
  }
  if (zero_visits / static_cast<double>(series.size()) >= thresholds.min_zero_returns) return StabilityLabel::stable;
  return all_rising ? StabilityLabel::unstable : StabilityLabel::ambiguous;
}

std::pair<SystemState, StepRecord> run_step(const NetworkModel& model, const SystemState& state,
                                            const PolicyFn& policy, const RngStream& step_rng) {
  return run_step(model, state, sample_step(model, state.q, step_rng), policy, step_rng);
}

std::pair<SystemState, StepRecord> run_step(const NetworkModel& model, const SystemState& state,
                                            const StepRealization& realization, const PolicyFn& policy,
                                            const RngStream& step_rng) {
  StepRecord record;
  record.t = state.t;
  record.realization = realization;
  RngStream policy_rng = step_rng.derive(Purpose::policy);
  record.decision = policy(model, state, realization, policy_rng, &record.stats);
  if (record.decision.r.size() != model.n_operations() || (record.decision.r.array() < 0).any()) {
    throw ParameterError("policy returned a malformed schedule");
  }
  RngStream exec_rng = step_rng.derive(Purpose::timeouts);
  auto [next, report] = execute(model, state, realization, record.decision, exec_rng);
  record.report = std::move(report);
  return {std::move(next), std::move(record)};
}

RunResult run_simulation(const NetworkModel& model, const PolicyFn& policy, Count n_steps, std::uint64_t seed,
                         std::uint64_t run, const StepObserver& observer) {
  if (n_steps < 1) throw ParameterError("n_steps must be at least 1");
  RunResult result;
  result.total_demand.reserve(static_cast<std::size_t>(n_steps));
  SystemState state = SystemState::empty(model.n_queues());
  double backlog_sum = 0.0;
  for (Count t = 0; t < n_steps; ++t) {
    auto [next, record] = run_step(model, state, policy, step_stream(seed, run, static_cast<std::uint64_t>(t)));
    result.arrivals += record.realization.demands.sum();
    result.served += record.report.served;
    result.clamped += record.report.clamped_demand;
    result.failed_ops += record.report.total_failed();
    result.solver_nodes += record.stats.nodes;
    result.solver_exhausted = result.solver_exhausted || record.stats.exhausted;
    const Count total = next.d.sum();
    result.total_demand.push_back(total);
    backlog_sum += static_cast<double>(total);
    result.max_excursion = std::max(result.max_excursion, total);
    if (observer) observer(record, next);
    state = std::move(next);
  }
  result.final_backlog = state.d.sum();
  result.avg_backlog = backlog_sum / static_cast<double>(n_steps);
  if (result.arrivals != result.served + result.final_backlog + result.clamped) {
    throw Error("demand ledger does not balance in run " + std::to_string(run));
  }
  return result;
}

std::vector<NodePair> draw_pairs(const NetworkGraph& graph, const std::vector<NodePair>& fixed, int parasitic_count,
                                 std::uint64_t seed, std::uint64_t run) {
  if (parasitic_count < 0) throw ParameterError("parasitic pair count must be nonnegative");
  std::vector<NodePair> candidates;
  for (NodeIndex u = 0; u < graph.node_count(); ++u) {
    for (NodeIndex v = u + 1; v < graph.node_count(); ++v) {
      const NodePair p(u, v);
      if (std::find(fixed.begin(), fixed.end(), p) == fixed.end()) candidates.push_back(p);
    }
  }
  if (static_cast<std::size_t>(parasitic_count) > candidates.size()) {
    throw ParameterError("not enough node pairs for " + std::to_string(parasitic_count) + " parasitic pairs");
  }
  RngStream rng = RngStream(seed).derive({static_cast<std::uint64_t>(Purpose::parasitic), run});
  std::vector<NodePair> out = fixed;
  for (std::size_t k = 0; k < static_cast<std::size_t>(parasitic_count); ++k) {
    const auto pick = k + static_cast<std::size_t>(rng.uniform_int(candidates.size() - k));
    std::swap(candidates[k], candidates[pick]);
    out.push_back(candidates[k]);
  }
  return out;
}

NetworkModel build_run_model(const SimConfig& sim, const SweepConfig& sweep, std::uint64_t run) {
  std::vector<NodePair> fixed;
  for (const auto& [a, b] : sim.fixed_pairs) fixed.emplace_back(sim.graph.index(a), sim.graph.index(b));
  const auto pairs = draw_pairs(sim.graph, fixed, sweep.parasitic_count, sim.seed, run);
  std::vector<UserPair> users;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    UserPair u;
    u.endpoints = pairs[k];
    u.kind = k < fixed.size() ? PairKind::fixed : PairKind::parasitic;
    const std::uint64_t route_seed =
        RngStream(sim.seed).derive({static_cast<std::uint64_t>(Purpose::routing), run, k}).next_u64();
    u.routes = compute_routes(sim.graph, pairs[k].u, pairs[k].v, sweep.route_removal_prob, route_seed);
    users.push_back(std::move(u));
  }
  return build_network_model(sim.graph, std::move(users), sim.eta);
}

std::vector<double> cell_rates(const NetworkModel& model, double beta1, double beta2, double load) {
  std::vector<double> rates;
  int fixed_seen = 0;
  for (const auto& p : model.pairs) {
    if (p.kind == PairKind::parasitic) {
      rates.push_back(load);
    } else {
      rates.push_back(fixed_seen++ == 0 ? beta1 : beta2);
    }
  }
  return rates;
}

void parallel_for(std::size_t tasks, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = std::min<std::size_t>(tasks, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < tasks; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t k = next++; k < tasks; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = tasks;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

void validate(const SweepConfig& sweep, const SimConfig& sim) {
  if (sim.n_steps < 1) throw ParameterError("n_steps must be at least 1");
  if (sim.n_runs < 1) throw ParameterError("n_runs must be at least 1");
  if (sim.fixed_pairs.empty() || sim.fixed_pairs.size() > 2) throw ParameterError("one or two fixed pairs required");
  auto increasing = [](const std::vector<double>& g) {
    if (g.empty()) return false;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!(g[k] >= 0.0) || (k > 0 && !(g[k] > g[k - 1]))) return false;
    }
    return true;
  };
  if (!increasing(sweep.beta1)) throw ParameterError("beta1 grid must be nonnegative and strictly increasing");
  if (!increasing(sweep.beta2)) throw ParameterError("beta2 grid must be nonnegative and strictly increasing");
  if (sim.fixed_pairs.size() == 1 && (sweep.beta2.size() != 1 || sweep.beta2[0] != 0.0)) {
    throw ParameterError("beta2 grid requires a second fixed pair");
  }
  if (!(sweep.parasitic_load >= 0.0)) throw ParameterError("parasitic load must be nonnegative");
}

}  // namespace

std::vector<CellResult> run_sweep(const SweepConfig& sweep, const SimConfig& sim, PolicyKind kind,
                                  const SweepHooks& hooks) {
  return run_sweep(sweep, sim, make_policy(kind, sim.solver), hooks);
}

std::vector<CellResult> run_sweep(const SweepConfig& sweep, const SimConfig& sim, const PolicyFn& policy,
                                  const SweepHooks& hooks) {
  validate(sweep, sim);
  const int n1 = static_cast<int>(sweep.beta1.size());
  const int n2 = static_cast<int>(sweep.beta2.size());

  std::vector<NetworkModel> models;
  for (int run = 0; run < sim.n_runs; ++run) models.push_back(build_run_model(sim, sweep, static_cast<std::uint64_t>(run)));

  std::vector<std::optional<CellResult>> grid(static_cast<std::size_t>(n1 * n2));
  auto at = [&](int i, int j) -> std::optional<CellResult>& { return grid[static_cast<std::size_t>(i * n2 + j)]; };
  auto dominated = [&](int i, int j) {
    for (int a = 0; a <= i; ++a) {
      for (int b = 0; b <= j; ++b) {
        if ((a != i || b != j) && at(a, b) && at(a, b)->label == StabilityLabel::unstable) return true;
      }
    }
    return false;
  };

  int budget = hooks.max_cells.value_or(n1 * n2);
  bool stopped = false;
  for (int wave = 0; wave <= n1 + n2 - 2 && !stopped; ++wave) {
    std::vector<CellResult> pending;
    for (int i = std::max(0, wave - n2 + 1); i <= std::min(wave, n1 - 1); ++i) {
      const int j = wave - i;
      if (hooks.cached) {
        if (auto cached = hooks.cached(i, j)) {
          at(i, j) = std::move(cached);
          continue;
        }
      }
      CellResult cell;
      cell.i = i;
      cell.j = j;
      cell.beta1 = sweep.beta1[static_cast<std::size_t>(i)];
      cell.beta2 = sweep.beta2[static_cast<std::size_t>(j)];
      if (sweep.pareto_skip && dominated(i, j)) {
        cell.label = StabilityLabel::skipped;
        if (hooks.completed) hooks.completed(cell);
        at(i, j) = std::move(cell);
        continue;
      }
      if (budget <= 0) {
        stopped = true;
        continue;
      }
      --budget;
      cell.runs.resize(static_cast<std::size_t>(sim.n_runs));
      pending.push_back(std::move(cell));
    }

    const auto n_runs = static_cast<std::size_t>(sim.n_runs);
    parallel_for(pending.size() * n_runs, sim.jobs, [&](std::size_t task) {
      CellResult& cell = pending[task / n_runs];
      const auto run = task % n_runs;
      NetworkModel model = models[run];
      set_demand_rates(model, cell_rates(model, cell.beta1, cell.beta2, sweep.parasitic_load));
      StepObserver observer;
      if (hooks.observer) observer = hooks.observer(cell.i, cell.j, static_cast<int>(run));
      cell.runs[run] = run_simulation(model, policy, sim.n_steps, sim.seed, run, observer);
    });

    for (auto& cell : pending) {
      std::vector<std::vector<Count>> series;
      double backlog = 0.0;
      for (const auto& r : cell.runs) {
        series.push_back(r.total_demand);
        backlog += r.avg_backlog;
        cell.max_excursion = std::max(cell.max_excursion, r.max_excursion);
        cell.served_total += r.served;
        cell.failed_ops += r.failed_ops;
        if (r.solver_exhausted) {
          spdlog::warn("cell ({}, {}): solver budget exhausted during at least one step", cell.beta1, cell.beta2);
        }
      }
      cell.avg_backlog = backlog / static_cast<double>(cell.runs.size());
      cell.label = classify_stability(series, sim.thresholds);
      if (hooks.completed) hooks.completed(cell);
      at(cell.i, cell.j) = std::move(cell);
    }
  }

  std::vector<CellResult> out;
  for (auto& cell : grid) {
    if (cell) out.push_back(std::move(*cell));
  }
  return out;
}

}  // namespace qnet
