#include "qnet/experiment.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "qnet/errors.hpp"

namespace qnet {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string shortest(double v) { return fmt::format("{}", v); }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Everything that influences results; the output section does not.
std::string results_key(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.output_dir = "results";
  c.trace = TraceLevel::none;
  return fmt::format("{:016x}", fnv1a(config_to_json(c, -1)));
}

json cell_to_json(const CellResult& cell) {
  return {{"i", cell.i},
          {"j", cell.j},
          {"beta1", cell.beta1},
          {"beta2", cell.beta2},
          {"stability", std::string(to_string(cell.label))},
          {"avg_backlog", cell.avg_backlog},
          {"max_excursion", cell.max_excursion},
          {"served_total", cell.served_total},
          {"failed_ops", cell.failed_ops}};
}

CellResult cell_from_json(const json& j) {
  CellResult cell;
  cell.i = j.at("i").get<int>();
  cell.j = j.at("j").get<int>();
  cell.beta1 = j.at("beta1").get<double>();
  cell.beta2 = j.at("beta2").get<double>();
  cell.label = parse_stability_label(j.at("stability").get<std::string>());
  cell.avg_backlog = j.at("avg_backlog").get<double>();
  cell.max_excursion = j.at("max_excursion").get<Count>();
  cell.served_total = j.at("served_total").get<Count>();
  cell.failed_ops = j.at("failed_ops").get<Count>();
  return cell;
}

// Cells finished by an earlier invocation, keyed by grid position.
std::map<std::pair<int, int>, CellResult> read_cache(const fs::path& path, const std::string& key) {
  std::map<std::pair<int, int>, CellResult> cells;
  std::ifstream in(path);
  if (!in) return cells;
  std::string line;
  if (!std::getline(in, line)) return cells;
  try {
    if (json::parse(line).at("config_hash").get<std::string>() != key) return cells;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      CellResult cell = cell_from_json(json::parse(line));
      cells[{cell.i, cell.j}] = std::move(cell);
    }
  } catch (const std::exception& e) {
    // A torn final line from an interrupted write loses only that cell.
    spdlog::debug("cache {}: stopped reading at a malformed line ({})", path.string(), e.what());
  }
  return cells;
}

json realization_json(const StepRealization& x) {
  auto vec = [](const CountVector& v) { return std::vector<Count>(v.data(), v.data() + v.size()); };
  return {{"arrivals", vec(x.arrivals)}, {"losses", vec(x.losses)}, {"demands", vec(x.demands)}};
}

std::string step_line(int run, const StepRecord& record, const SystemState& next) {
  auto vec = [](const CountVector& v) { return std::vector<Count>(v.data(), v.data() + v.size()); };
  json j = {{"type", "step"},
            {"run", run},
            {"t", record.t},
            {"realization", realization_json(record.realization)},
            {"decision", vec(record.decision.r)},
            {"executed", vec(record.report.executed)},
            {"failed", vec(record.report.failed)},
            {"served", record.report.served},
            {"q", vec(next.q)},
            {"d", vec(next.d)}};
  return j.dump();
}

std::string run_line(int run, const RunResult& r) {
  json j = {{"type", "run"},
            {"run", run},
            {"avg_backlog", r.avg_backlog},
            {"max_excursion", r.max_excursion},
            {"arrivals", r.arrivals},
            {"served", r.served},
            {"final_backlog", r.final_backlog},
            {"clamped", r.clamped},
            {"failed_ops", r.failed_ops},
            {"solver_nodes", r.solver_nodes}};
  return j.dump();
}

void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string grid_file_name(PolicyKind kind, double load) {
  return fmt::format("grid_{}_{}.csv", to_string(kind), shortest(load));
}

std::string format_grid_csv(const std::vector<CellResult>& cells) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& c : cells) {
    out += fmt::format("{},{},{},{},{},{},{}\n", shortest(c.beta1), shortest(c.beta2), shortest(c.avg_backlog),
                       c.max_excursion, to_string(c.label), c.served_total, c.failed_ops);
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.out_dir = options.out_dir ? *options.out_dir : fs::path(config.output_dir);
  if (report.out_dir.is_relative() && !options.out_dir) report.out_dir = config.base_dir / report.out_dir;
  fs::create_directories(report.out_dir / ".cache");

  const NetworkGraph graph = build_graph(config);
  const SimConfig sim = make_sim_config(config, graph, options.jobs);
  const std::string key = results_key(config);
  std::optional<int> budget = options.max_cells;
  // Reported rates are in the configured unit, matching the load in file names.
  auto configured = [&](CellResult cell) {
    cell.beta1 = config.beta1[static_cast<std::size_t>(cell.i)];
    cell.beta2 = config.beta2.empty() ? 0.0 : config.beta2[static_cast<std::size_t>(cell.j)];
    return cell;
  };

  ordered_json grids = ordered_json::array();
  std::map<std::string, ordered_json> per_policy;

  for (PolicyKind kind : config.policies) {
    for (double load : config.parasitic_load) {
      const std::string csv_name = grid_file_name(kind, load);
      const std::string stem = csv_name.substr(0, csv_name.size() - 4);
      const fs::path cache_path = report.out_dir / ".cache" / (stem + ".ndjson");
      auto cached = read_cache(cache_path, key);

      // Rewrite the cache so it holds only entries for this configuration.
      {
        std::string content = json{{"config_hash", key}}.dump() + "\n";
        for (const auto& [pos, cell] : cached) content += cell_to_json(cell).dump() + "\n";
        write_file(cache_path, content);
      }
      std::ofstream cache_out(cache_path, std::ios::app);
      if (!cache_out) throw Error("cannot append to " + cache_path.string());

      std::mutex trace_mutex;
      std::map<std::tuple<int, int, int>, std::string> trace_buffers;

      SweepHooks hooks;
      hooks.cached = [&](int i, int j) -> std::optional<CellResult> {
        auto it = cached.find({i, j});
        if (it == cached.end()) return std::nullopt;
        return it->second;
      };
      hooks.completed = [&](const CellResult& cell) {
        if (cell.label != StabilityLabel::skipped) ++report.cells_evaluated;
        cache_out << cell_to_json(cell).dump() << "\n" << std::flush;
        const CellResult shown = configured(cell);
        spdlog::info("{} L={} cell ({}, {}): {} avg_backlog={}", to_string(kind), shortest(load), shortest(shown.beta1),
                     shortest(shown.beta2), to_string(cell.label), shortest(cell.avg_backlog));
        if (config.trace == TraceLevel::none || cell.runs.empty()) return;
        std::string content;
        for (int run = 0; run < static_cast<int>(cell.runs.size()); ++run) {
          std::lock_guard lock(trace_mutex);
          auto it = trace_buffers.find({cell.i, cell.j, run});
          if (it != trace_buffers.end()) {
            content += it->second;
            trace_buffers.erase(it);
          }
          content += run_line(run, cell.runs[static_cast<std::size_t>(run)]) + "\n";
        }
        write_file(report.out_dir / fmt::format("trace_{}_{}_{}.ndjson", stem.substr(5), cell.i, cell.j), content);
      };
      if (config.trace == TraceLevel::steps) {
        hooks.observer = [&](int i, int j, int run) -> StepObserver {
          std::string* buffer;
          {
            std::lock_guard lock(trace_mutex);
            buffer = &trace_buffers[{i, j, run}];
          }
          return [buffer, run](const StepRecord& record, const SystemState& next) {
            *buffer += step_line(run, record, next);
            *buffer += '\n';
          };
        };
      }
      if (budget) hooks.max_cells = *budget;

      const int before = report.cells_evaluated;
      const SweepConfig sweep = make_sweep_config(config, load);
      const std::vector<CellResult> cells = run_sweep(sweep, sim, kind, hooks);
      if (budget) *budget -= report.cells_evaluated - before;

      const auto expected = sweep.beta1.size() * sweep.beta2.size();
      if (cells.size() < expected) {
        report.complete = false;
        break;
      }
      std::vector<CellResult> rows;
      for (const auto& c : cells) rows.push_back(configured(c));
      write_file(report.out_dir / csv_name, format_grid_csv(rows));
      report.csv_files.push_back(report.out_dir / csv_name);

      std::map<std::string, int> counts{{"stable", 0}, {"unstable", 0}, {"ambiguous", 0}, {"skipped", 0}};
      double backlog = 0.0;
      int evaluated = 0;
      for (const auto& c : cells) {
        ++counts[std::string(to_string(c.label))];
        if (c.label != StabilityLabel::skipped) {
          backlog += c.avg_backlog;
          ++evaluated;
        }
      }
      ordered_json entry;
      entry["policy"] = std::string(to_string(kind));
      entry["parasitic_load"] = load;
      entry["csv"] = csv_name;
      entry["cells"] = cells.size();
      entry["labels"] = counts;
      entry["mean_avg_backlog"] = evaluated ? backlog / evaluated : 0.0;
      entry["stable_fraction"] = static_cast<double>(counts["stable"]) / static_cast<double>(cells.size());
      grids.push_back(entry);
      per_policy[std::string(to_string(kind))].push_back(entry);
    }
    if (!report.complete) break;
  }

  ordered_json summary;
  summary["config"] = ordered_json::parse(config_to_json(config));
  summary["derived"] = {{"eta", sim.eta},
                        {"rate_scale", config.rate_scale()},
                        {"nodes", graph.node_count()},
                        {"edges", graph.edge_count()}};
  summary["seeds"] = {{"master", config.seed}, {"topology", config.topology_seed.value_or(config.seed)}};
  summary["complete"] = report.complete;
  summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  summary["grids"] = grids;
  ordered_json policies = ordered_json::object();
  for (auto& [name, entries] : per_policy) policies[name] = entries;
  summary["policies"] = policies;
  write_file(report.out_dir / "summary.json", summary.dump(2) + "\n");
  return report;
}

}  // namespace qnet
