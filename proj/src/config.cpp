#include "qnet/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qnet/errors.hpp"

namespace qnet {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const char* type_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  return v.type_name();
}

// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw ConfigError(path_, std::string("expected an object, got ") + type_name(value_));
  }

  [[nodiscard]] bool has(const std::string& key) const { return value_.contains(key); }
  [[nodiscard]] bool value_is(const std::string& key, const std::string& text) const {
    auto it = value_.find(key);
    return it != value_.end() && it->is_string() && it->get<std::string>() == text;
  }
  [[nodiscard]] std::string path(const std::string& key) const { return join(path_, key); }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(path(key), "missing required key");
    return *v;
  }

  const json* find(const std::string& key) {
    auto it = value_.find(key);
    if (it == value_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  Section section(const std::string& key) { return Section(require(key), path(key)); }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    return as_real(*v, path(key));
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    return as_integer(*v, path(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path(key), std::string("expected a boolean, got ") + type_name(*v));
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    return as_string(*v, path(key));
  }

  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    if (!v->is_array()) throw ConfigError(path(key), std::string("expected an array, got ") + type_name(*v));
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      out.push_back(as_real((*v)[k], path(key) + "[" + std::to_string(k) + "]"));
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, unused] : value_.items()) {
      if (!used_.count(key)) throw ConfigError(path(key), "unknown key");
    }
  }

  static double as_real(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, std::string("expected a number, got ") + type_name(v));
    return v.get<double>();
  }

  static std::int64_t as_integer(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) {
      if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) throw ConfigError(where, "integer out of range");
      return static_cast<std::int64_t>(v.get<std::uint64_t>());
    }
    if (!v.is_number_integer()) throw ConfigError(where, std::string("expected an integer, got ") + type_name(v));
    return v.get<std::int64_t>();
  }

  static std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where, std::string("expected a string, got ") + type_name(v));
    return v.get<std::string>();
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

void check_grid(const std::vector<double>& grid, const std::string& path) {
  check(!grid.empty(), path, "grid must not be empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    check(std::isfinite(grid[k]) && grid[k] >= 0.0, path, "rates must be finite and nonnegative");
    check(k == 0 || grid[k] > grid[k - 1], path, "grid must be strictly increasing");
  }
}

std::vector<EdgeRate> parse_edge_rates(const json& v, const std::string& where) {
  check(v.is_array(), where, std::string("expected an array, got ") + type_name(v));
  std::vector<EdgeRate> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string item = where + "[" + std::to_string(k) + "]";
    const json& e = v[k];
    check(e.is_array() && e.size() == 3, item, "expected [node, node, alpha]");
    EdgeRate r{Section::as_string(e[0], item), Section::as_string(e[1], item), Section::as_real(e[2], item)};
    check(r.a != r.b, item, "edge endpoints must differ");
    check(std::isfinite(r.alpha) && r.alpha >= 0.0, item, "alpha must be finite and nonnegative");
    out.push_back(std::move(r));
  }
  return out;
}

TopologyKind parse_kind(const std::string& s, const std::string& where) {
  for (auto k : {TopologyKind::grid, TopologyKind::holed_grid, TopologyKind::erdos_renyi, TopologyKind::watts_strogatz,
                 TopologyKind::custom}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError(where, "unknown topology kind '" + s + "'");
}

void parse_topology(Section s, ExperimentConfig& c) {
  c.topology_kind = parse_kind(s.string("kind"), s.path("kind"));
  auto positive = [&](const std::string& key, std::int64_t min) {
    const std::int64_t v = s.integer(key);
    check(v >= min && v <= 100000, s.path(key), "must be at least " + std::to_string(min));
    return static_cast<int>(v);
  };
  auto probability = [&]() {
    const double p = s.real("probability");
    check(p >= 0.0 && p <= 1.0, s.path("probability"), "must lie in [0, 1]");
    return p;
  };
  switch (c.topology_kind) {
    case TopologyKind::grid:
      c.rows = positive("rows", 1);
      c.cols = positive("cols", 1);
      break;
    case TopologyKind::holed_grid:
      c.rows = positive("rows", 1);
      c.cols = positive("cols", 1);
      c.probability = probability();
      break;
    case TopologyKind::erdos_renyi:
      c.nodes = positive("nodes", 2);
      c.probability = probability();
      break;
    case TopologyKind::watts_strogatz:
      c.nodes = positive("nodes", 3);
      c.neighbors = positive("neighbors", 2);
      check(c.neighbors % 2 == 0 && c.neighbors < c.nodes, s.path("neighbors"), "must be even and below nodes");
      c.probability = probability();
      break;
    case TopologyKind::custom: {
      const bool file = s.has("edge_list");
      const bool inline_edges = s.has("edges");
      check(file != inline_edges, s.path("edges"), "give exactly one of edge_list and edges");
      if (file) c.edge_list = s.string("edge_list");
      if (inline_edges) {
        c.edges = parse_edge_rates(*s.find("edges"), s.path("edges"));
        check(!c.edges.empty(), s.path("edges"), "must not be empty");
      }
      break;
    }
  }
  if (s.has("seed")) {
    const std::int64_t seed = s.integer("seed");
    check(seed >= 0, s.path("seed"), "must be nonnegative");
    c.topology_seed = static_cast<std::uint64_t>(seed);
  }
  s.finish();
}

void parse_physics(Section s, ExperimentConfig& c) {
  check(!(s.has("tau") && s.has("eta")), s.path("eta"), "tau and eta are mutually exclusive");
  check(s.has("tau") || s.has("eta"), s.path("eta"), "one of tau and eta is required");
  const bool needs_delta_t = s.has("tau") || (s.has("rate_unit") && s.value_is("rate_unit", "hz"));
  check(!needs_delta_t || s.has("delta_t"), s.path("delta_t"), "required when tau or rate_unit 'hz' is given");
  c.delta_t = s.real("delta_t", 1.0);
  check(std::isfinite(c.delta_t) && c.delta_t > 0.0, s.path("delta_t"), "must be positive");
  if (s.has("tau")) {
    c.tau = s.real("tau");
    check(std::isfinite(*c.tau) && *c.tau > 0.0, s.path("tau"), "must be positive");
  } else {
    c.eta = s.real("eta");
    check(*c.eta > 0.0 && *c.eta <= 1.0, s.path("eta"), "must lie in (0, 1]");
  }
  c.alpha = s.real("alpha", 1.0);
  check(std::isfinite(c.alpha) && c.alpha >= 0.0, s.path("alpha"), "must be finite and nonnegative");
  if (const json* e = s.find("edge_alpha")) c.edge_alpha = parse_edge_rates(*e, s.path("edge_alpha"));
  const std::string unit = s.string("rate_unit", "per_step");
  if (unit == "per_step") {
    c.rate_unit = RateUnit::per_step;
  } else if (unit == "hz") {
    c.rate_unit = RateUnit::hz;
  } else {
    throw ConfigError(s.path("rate_unit"), "expected 'per_step' or 'hz'");
  }
  s.finish();
}

void parse_pairs(Section s, ExperimentConfig& c) {
  const json& fixed = s.require("fixed");
  const std::string fpath = s.path("fixed");
  check(fixed.is_array() && !fixed.empty() && fixed.size() <= 2, fpath, "expected one or two [node, node] pairs");
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    const std::string item = fpath + "[" + std::to_string(k) + "]";
    check(fixed[k].is_array() && fixed[k].size() == 2, item, "expected [node, node]");
    std::string a = Section::as_string(fixed[k][0], item);
    std::string b = Section::as_string(fixed[k][1], item);
    check(a != b, item, "pair endpoints must differ");
    if (b < a) std::swap(a, b);
    for (const auto& p : c.fixed_pairs) check(p != std::make_pair(a, b), item, "duplicate pair");
    c.fixed_pairs.emplace_back(std::move(a), std::move(b));
  }
  c.beta1 = s.reals("beta1");
  check_grid(c.beta1, s.path("beta1"));
  if (c.fixed_pairs.size() == 2) {
    c.beta2 = s.reals("beta2");
    check_grid(c.beta2, s.path("beta2"));
  } else {
    check(!s.has("beta2"), s.path("beta2"), "only allowed with two fixed pairs");
  }
  const std::int64_t count = s.integer("parasitic_count", 8);
  check(count >= 0 && count <= 100000, s.path("parasitic_count"), "must be nonnegative");
  c.parasitic_count = static_cast<int>(count);
  c.parasitic_load = s.reals("parasitic_load", std::vector<double>{0.0});
  check_grid(c.parasitic_load, s.path("parasitic_load"));
  c.route_removal_prob = s.real("route_removal_prob", 0.5);
  check(c.route_removal_prob >= 0.0 && c.route_removal_prob <= 1.0, s.path("route_removal_prob"),
        "must lie in [0, 1]");
  c.pareto_skip = s.boolean("pareto_skip", true);
  s.finish();
}

void parse_policies(const json& v, ExperimentConfig& c) {
  check(v.is_array() && !v.empty(), "policies", "expected a nonempty array of policy names");
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string item = "policies[" + std::to_string(k) + "]";
    const std::string name = Section::as_string(v[k], item);
    PolicyKind kind;
    try {
      kind = parse_policy_kind(name);
    } catch (const ParameterError&) {
      throw ConfigError(item, "unknown policy '" + name + "'");
    }
    for (auto p : c.policies) check(p != kind, item, "duplicate policy");
    c.policies.push_back(kind);
  }
}

void parse_simulation(Section s, ExperimentConfig& c) {
  c.n_steps = s.integer("n_steps", 5000);
  check(c.n_steps >= 10, s.path("n_steps"), "must be at least 10");
  const std::int64_t runs = s.integer("n_runs", 10);
  check(runs >= 1 && runs <= 1000000, s.path("n_runs"), "must be at least 1");
  c.n_runs = static_cast<int>(runs);
  const std::int64_t seed = s.integer("seed", 0);
  check(seed >= 0, s.path("seed"), "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.thresholds.min_zero_returns = s.real("min_zero_returns", 3.0);
  check(c.thresholds.min_zero_returns >= 0.0, s.path("min_zero_returns"), "must be nonnegative");
  c.thresholds.slope = s.real("slope_threshold", 0.01);
  check(std::isfinite(c.thresholds.slope), s.path("slope_threshold"), "must be finite");
  c.solver_node_budget = s.integer("solver_node_budget", 10'000'000);
  check(c.solver_node_budget >= 1, s.path("solver_node_budget"), "must be positive");
  s.finish();
}

void parse_output(Section s, ExperimentConfig& c) {
  c.output_dir = s.string("directory", "results");
  check(!c.output_dir.empty(), s.path("directory"), "must not be empty");
  const std::string trace = s.string("trace", "none");
  if (trace == "none") {
    c.trace = TraceLevel::none;
  } else if (trace == "summary") {
    c.trace = TraceLevel::summary;
  } else if (trace == "steps") {
    c.trace = TraceLevel::steps;
  } else {
    throw ConfigError(s.path("trace"), "expected 'none', 'summary' or 'steps'");
  }
  s.finish();
}

// Rejects repeated keys inside any object; the default parser keeps the last.
json parse_strict(std::string_view text) {
  struct Frame {
    std::set<std::string> keys;
    std::string path;
    std::string current;
    bool array{false};
  };
  std::vector<Frame> stack;
  auto child_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.array ? f.path + "[]" : join(f.path, f.current);
  };
  json::parser_callback_t callback = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        stack.push_back({{}, child_path(), {}, false});
        break;
      case json::parse_event_t::array_start:
        stack.push_back({{}, child_path(), {}, true});
        break;
      case json::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!stack.back().keys.insert(key).second) throw ConfigError(join(stack.back().path, key), "duplicate key");
        stack.back().current = key;
        break;
      }
      case json::parse_event_t::object_end:
      case json::parse_event_t::array_end:
        stack.pop_back();
        break;
      case json::parse_event_t::value:
        break;
    }
    return true;
  };
  try {
    return json::parse(text.begin(), text.end(), callback);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

ordered_json edge_rates_json(const std::vector<EdgeRate>& rates) {
  ordered_json out = ordered_json::array();
  for (const auto& r : rates) out.push_back({r.a, r.b, r.alpha});
  return out;
}

}  // namespace

double ExperimentConfig::effective_eta() const { return eta ? *eta : memory_efficiency(delta_t, *tau); }

std::string_view to_string(TraceLevel level) {
  switch (level) {
    case TraceLevel::none: return "none";
    case TraceLevel::summary: return "summary";
    case TraceLevel::steps: return "steps";
  }
  return "none";
}

std::string_view to_string(RateUnit unit) { return unit == RateUnit::hz ? "hz" : "per_step"; }

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::grid: return "grid";
    case TopologyKind::holed_grid: return "holed_grid";
    case TopologyKind::erdos_renyi: return "erdos_renyi";
    case TopologyKind::watts_strogatz: return "watts_strogatz";
    case TopologyKind::custom: return "custom";
  }
  return "custom";
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_strict(text);
  ExperimentConfig c;
  c.base_dir = base_dir;
  Section root(doc, "");
  parse_topology(root.section("topology"), c);
  parse_physics(root.section("physics"), c);
  parse_pairs(root.section("pairs"), c);
  parse_policies(root.require("policies"), c);
  if (root.has("simulation")) {
    parse_simulation(root.section("simulation"), c);
  } else {
    parse_simulation(Section(json::object(), "simulation"), c);
  }
  if (root.has("output")) {
    parse_output(root.section("output"), c);
  } else {
    parse_output(Section(json::object(), "output"), c);
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
  ordered_json topology;
  topology["kind"] = std::string(to_string(c.topology_kind));
  switch (c.topology_kind) {
    case TopologyKind::grid:
      topology["rows"] = c.rows;
      topology["cols"] = c.cols;
      break;
    case TopologyKind::holed_grid:
      topology["rows"] = c.rows;
      topology["cols"] = c.cols;
      topology["probability"] = c.probability;
      break;
    case TopologyKind::erdos_renyi:
      topology["nodes"] = c.nodes;
      topology["probability"] = c.probability;
      break;
    case TopologyKind::watts_strogatz:
      topology["nodes"] = c.nodes;
      topology["neighbors"] = c.neighbors;
      topology["probability"] = c.probability;
      break;
    case TopologyKind::custom:
      if (c.edges.empty()) {
        topology["edge_list"] = c.edge_list;
      } else {
        topology["edges"] = edge_rates_json(c.edges);
      }
      break;
  }
  if (c.topology_seed) topology["seed"] = *c.topology_seed;

  ordered_json physics;
  physics["delta_t"] = c.delta_t;
  if (c.tau) physics["tau"] = *c.tau;
  if (c.eta) physics["eta"] = *c.eta;
  physics["alpha"] = c.alpha;
  physics["edge_alpha"] = edge_rates_json(c.edge_alpha);
  physics["rate_unit"] = std::string(to_string(c.rate_unit));

  ordered_json pairs;
  pairs["fixed"] = ordered_json::array();
  for (const auto& [a, b] : c.fixed_pairs) pairs["fixed"].push_back({a, b});
  pairs["beta1"] = c.beta1;
  if (c.fixed_pairs.size() == 2) pairs["beta2"] = c.beta2;
  pairs["parasitic_count"] = c.parasitic_count;
  pairs["parasitic_load"] = c.parasitic_load;
  pairs["route_removal_prob"] = c.route_removal_prob;
  pairs["pareto_skip"] = c.pareto_skip;

  ordered_json policies = ordered_json::array();
  for (auto p : c.policies) policies.push_back(std::string(to_string(p)));

  ordered_json simulation;
  simulation["n_steps"] = c.n_steps;
  simulation["n_runs"] = c.n_runs;
  simulation["seed"] = c.seed;
  simulation["min_zero_returns"] = c.thresholds.min_zero_returns;
  simulation["slope_threshold"] = c.thresholds.slope;
  simulation["solver_node_budget"] = c.solver_node_budget;

  ordered_json output;
  output["directory"] = c.output_dir;
  output["trace"] = std::string(to_string(c.trace));

  ordered_json doc;
  doc["topology"] = std::move(topology);
  doc["physics"] = std::move(physics);
  doc["pairs"] = std::move(pairs);
  doc["policies"] = std::move(policies);
  doc["simulation"] = std::move(simulation);
  doc["output"] = std::move(output);
  return doc.dump(indent);
}

NetworkGraph build_graph(const ExperimentConfig& c) {
  const double scale = c.rate_scale();
  NetworkGraph graph;
  if (c.topology_kind == TopologyKind::custom && !c.edges.empty()) {
    std::set<std::string> names;
    for (const auto& e : c.edges) {
      names.insert(e.a);
      names.insert(e.b);
    }
    graph = NetworkGraph(std::vector<std::string>(names.begin(), names.end()));
    for (const auto& e : c.edges) graph.add_edge(e.a, e.b, e.alpha);
    if (!graph.is_connected()) throw ConfigError("topology.edges", "graph is not connected");
  } else {
    TopologyParams params;
    params.rows = c.rows;
    params.cols = c.cols;
    params.nodes = c.nodes;
    params.probability = c.probability;
    params.neighbors = c.neighbors;
    params.alpha = c.alpha;
    if (c.topology_kind == TopologyKind::custom) {
      const std::filesystem::path p(c.edge_list);
      params.edge_list_path = (p.is_relative() ? c.base_dir / p : p).string();
    }
    graph = generate_topology(c.topology_kind, params, c.topology_seed.value_or(c.seed));
  }
  for (const auto& e : c.edge_alpha) {
    const auto a = graph.find(e.a);
    const auto b = graph.find(e.b);
    if (!a || !b || !graph.has_edge(*a, *b)) {
      throw ConfigError("physics.edge_alpha", "no edge " + e.a + "-" + e.b + " in the topology");
    }
    graph.set_edge_rate(*a, *b, e.alpha);
  }
  if (scale != 1.0) {
    for (const auto& e : std::vector<Edge>(graph.edges())) graph.set_edge_rate(e.nodes.u, e.nodes.v, e.alpha * scale);
  }
  for (const auto& [a, b] : c.fixed_pairs) {
    if (!graph.find(a)) throw ConfigError("pairs.fixed", "unknown node '" + a + "'");
    if (!graph.find(b)) throw ConfigError("pairs.fixed", "unknown node '" + b + "'");
  }
  return graph;
}

SimConfig make_sim_config(const ExperimentConfig& c, NetworkGraph graph, int jobs) {
  SimConfig sim;
  sim.graph = std::move(graph);
  sim.eta = c.effective_eta();
  sim.fixed_pairs = c.fixed_pairs;
  sim.n_steps = c.n_steps;
  sim.n_runs = c.n_runs;
  sim.seed = c.seed;
  sim.thresholds = c.thresholds;
  sim.solver.node_budget = c.solver_node_budget;
  sim.jobs = jobs;
  return sim;
}

SweepConfig make_sweep_config(const ExperimentConfig& c, double parasitic_load) {
  const double scale = c.rate_scale();
  SweepConfig sweep;
  for (double b : c.beta1) sweep.beta1.push_back(b * scale);
  sweep.beta2.clear();
  if (c.beta2.empty()) {
    sweep.beta2.push_back(0.0);
  } else {
    for (double b : c.beta2) sweep.beta2.push_back(b * scale);
  }
  sweep.parasitic_count = c.parasitic_count;
  sweep.parasitic_load = parasitic_load * scale;
  sweep.route_removal_prob = c.route_removal_prob;
  sweep.pareto_skip = c.pareto_skip;
  return sweep;
}

}  // namespace qnet
