#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qnet/config.hpp"
#include "qnet/harness.hpp"

namespace qnet {

struct ExperimentOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output.directory
  int jobs{1};
  std::optional<int> max_cells;  // stop after evaluating this many new cells
};

struct ExperimentReport {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> csv_files;
  int cells_evaluated{0};
  bool complete{true};
};

inline constexpr const char* kCsvHeader = "beta1,beta2,avg_backlog,max_excursion,stability,served_total,failed_ops";

/// `grid_<policy>_<L>.csv`
std::string grid_file_name(PolicyKind kind, double load);

/// Header plus one row per cell, doubles in shortest round-trip form.
std::string format_grid_csv(const std::vector<CellResult>& cells);

/// Runs every (policy, load) sweep and writes the CSV grids, summary.json and
/// any traces under the output directory. Finished cells are cached in
/// `.cache/` so an interrupted experiment resumes where it stopped; a cache
/// written under a different configuration is ignored.
ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

}  // namespace qnet
