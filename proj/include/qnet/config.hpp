#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qnet/harness.hpp"
#include "qnet/policies.hpp"
#include "qnet/topology.hpp"

namespace qnet {

enum class TraceLevel { none, summary, steps };
enum class RateUnit { per_step, hz };

struct EdgeRate {
  std::string a;
  std::string b;
  double alpha{0.0};
  bool operator==(const EdgeRate&) const = default;
};

/// Effective experiment configuration, defaults applied. Rates are stored in
/// the configured unit; see sim_config / sweep_config for per-step values.
struct ExperimentConfig {
  TopologyKind topology_kind{TopologyKind::grid};
  int rows{0};
  int cols{0};
  int nodes{0};
  double probability{0.0};
  int neighbors{0};
  std::string edge_list;          // custom kind, file path
  std::vector<EdgeRate> edges;    // custom kind, inline
  std::optional<std::uint64_t> topology_seed;

  double delta_t{1.0};
  std::optional<double> tau;
  std::optional<double> eta;
  double alpha{1.0};
  std::vector<EdgeRate> edge_alpha;
  RateUnit rate_unit{RateUnit::per_step};

  std::vector<std::pair<std::string, std::string>> fixed_pairs;
  std::vector<double> beta1;
  std::vector<double> beta2;
  int parasitic_count{8};
  std::vector<double> parasitic_load{0.0};
  double route_removal_prob{0.5};
  bool pareto_skip{true};

  std::vector<PolicyKind> policies;

  Count n_steps{5000};
  int n_runs{10};
  std::uint64_t seed{0};
  StabilityThresholds thresholds;
  std::int64_t solver_node_budget{10'000'000};

  std::string output_dir{"results"};
  TraceLevel trace{TraceLevel::none};

  /// Directory that relative paths in the document are resolved against.
  std::filesystem::path base_dir;

  /// exp(-delta_t / tau) or the given eta.
  [[nodiscard]] double effective_eta() const;
  /// Multiplier from configured rates to per-step rates.
  [[nodiscard]] double rate_scale() const { return rate_unit == RateUnit::hz ? delta_t : 1.0; }

  bool operator==(const ExperimentConfig&) const = default;
};

std::string_view to_string(TraceLevel level);
std::string_view to_string(RateUnit unit);
std::string_view to_string(TopologyKind kind);

/// Strict JSON parsing: unknown, duplicate or missing keys, type mismatches
/// and out-of-range values raise ConfigError naming the key path.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// The effective configuration as JSON text, with every default written out.
/// Parsing it back gives an equal configuration.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// Graph with per-step rates applied.
NetworkGraph build_graph(const ExperimentConfig& config);
SimConfig make_sim_config(const ExperimentConfig& config, NetworkGraph graph, int jobs);
SweepConfig make_sweep_config(const ExperimentConfig& config, double parasitic_load);

}  // namespace qnet
