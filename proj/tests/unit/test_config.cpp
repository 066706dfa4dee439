#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "json.hpp"
#include "qnet/config.hpp"
#include "qnet/errors.hpp"

using namespace qnet;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "topology": {"kind": "grid", "rows": 3, "cols": 3},
    "physics": {"eta": 0.9},
    "pairs": {"fixed": [["r0c0", "r2c2"]], "beta1": [0.1, 0.2]},
    "policies": ["mw_fi"]
  })");
}

std::string error_path(const json& doc) {
  try {
    parse_config(doc.dump());
  } catch (const ConfigError& e) {
    return e.path;
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const ExperimentConfig c = parse_config(minimal().dump());
  EXPECT_EQ(c.topology_kind, TopologyKind::grid);
  EXPECT_EQ(c.rows, 3);
  EXPECT_EQ(c.effective_eta(), 0.9);
  EXPECT_EQ(c.n_steps, 5000);
  EXPECT_EQ(c.n_runs, 10);
  EXPECT_EQ(c.parasitic_count, 8);
  EXPECT_EQ(c.parasitic_load, std::vector<double>{0.0});
  EXPECT_EQ(c.route_removal_prob, 0.5);
  EXPECT_TRUE(c.pareto_skip);
  EXPECT_EQ(c.thresholds, StabilityThresholds{});
  EXPECT_EQ(c.output_dir, "results");
  EXPECT_EQ(c.trace, TraceLevel::none);
  EXPECT_TRUE(c.beta2.empty());
  ASSERT_EQ(c.policies.size(), 1u);
  EXPECT_EQ(c.policies[0], PolicyKind::mw_fi);
}

TEST(Config, EtaOutOfRangeNamesKey) {
  json doc = minimal();
  doc["physics"]["eta"] = 1.2;
  EXPECT_EQ(error_path(doc), "physics.eta");
}

TEST(Config, TauAndEtaExclusive) {
  json doc = minimal();
  doc["physics"]["tau"] = 0.5;
  doc["physics"]["delta_t"] = 0.01;
  EXPECT_THROW(parse_config(doc.dump()), ConfigError);
  doc["physics"].erase("eta");
  doc["physics"].erase("tau");
  EXPECT_EQ(error_path(doc), "physics.eta");
}

TEST(Config, TauNeedsDeltaT) {
  json doc = minimal();
  doc["physics"] = {{"tau", 0.5}};
  EXPECT_EQ(error_path(doc), "physics.delta_t");
  doc["physics"]["delta_t"] = 0.05;
  const ExperimentConfig c = parse_config(doc.dump());
  EXPECT_NEAR(c.effective_eta(), std::exp(-0.1), 1e-15);
}

TEST(Config, HzRatesScaleByDeltaT) {
  json doc = minimal();
  doc["physics"] = {{"eta", 0.9}, {"delta_t", 0.5}, {"rate_unit", "hz"}, {"alpha", 4.0}};
  doc["pairs"]["beta1"] = {1.0};
  const ExperimentConfig c = parse_config(doc.dump());
  const NetworkGraph g = build_graph(c);
  EXPECT_DOUBLE_EQ(*g.edge_rate(0, 1), 2.0);
  const SweepConfig sweep = make_sweep_config(c, 0.0);
  EXPECT_DOUBLE_EQ(sweep.beta1[0], 0.5);
}

TEST(Config, UnknownKeyNamesPath) {
  json doc = minimal();
  doc["simulation"] = {{"n_step", 10}};
  EXPECT_EQ(error_path(doc), "simulation.n_step");
  doc = minimal();
  doc["extra"] = 1;
  EXPECT_EQ(error_path(doc), "extra");
}

TEST(Config, DuplicateKeyRejected) {
  const std::string text = R"({
    "topology": {"kind": "grid", "rows": 3, "cols": 3, "rows": 4},
    "physics": {"eta": 0.9},
    "pairs": {"fixed": [["r0c0", "r2c2"]], "beta1": [0.1]},
    "policies": ["mw_fi"]
  })";
  try {
    parse_config(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path, "topology.rows");
  }
}

TEST(Config, MissingKeyNamesPath) {
  json doc = minimal();
  doc["pairs"].erase("beta1");
  EXPECT_EQ(error_path(doc), "pairs.beta1");
  doc = minimal();
  doc.erase("policies");
  EXPECT_EQ(error_path(doc), "policies");
}

TEST(Config, TypeMismatchNamesPath) {
  json doc = minimal();
  doc["topology"]["rows"] = "three";
  EXPECT_EQ(error_path(doc), "topology.rows");
  doc = minimal();
  doc["pairs"]["pareto_skip"] = 1;
  EXPECT_EQ(error_path(doc), "pairs.pareto_skip");
  doc = minimal();
  doc["simulation"] = {{"n_runs", 2.5}};
  EXPECT_EQ(error_path(doc), "simulation.n_runs");
}

TEST(Config, RangeChecks) {
  json doc = minimal();
  doc["simulation"] = {{"n_steps", 0}};
  EXPECT_EQ(error_path(doc), "simulation.n_steps");
  doc = minimal();
  doc["pairs"]["beta1"] = {0.2, 0.1};
  EXPECT_EQ(error_path(doc), "pairs.beta1");
  doc = minimal();
  doc["pairs"]["beta2"] = {0.1};
  EXPECT_EQ(error_path(doc), "pairs.beta2");
  doc = minimal();
  doc["policies"] = {"mw_fi", "bogus"};
  EXPECT_EQ(error_path(doc), "policies[1]");
  doc = minimal();
  doc["pairs"]["route_removal_prob"] = 1.5;
  EXPECT_EQ(error_path(doc), "pairs.route_removal_prob");
}

TEST(Config, UnknownFixedNodeIsReportedWhenBuilding) {
  json doc = minimal();
  doc["pairs"]["fixed"] = json::array({json::array({"r0c0", "zz"})});
  const ExperimentConfig c = parse_config(doc.dump());
  try {
    build_graph(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path, "pairs.fixed");
  }
}

TEST(Config, MalformedJson) {
  EXPECT_THROW(parse_config("{\"topology\": "), ConfigError);
}

TEST(Config, EchoRoundTrips) {
  json doc = minimal();
  doc["topology"] = {{"kind", "custom"}, {"edges", json::array({json::array({"A", "B", 1.0}), json::array({"B", "C", 0.5})})}};
  doc["physics"] = {{"tau", 2.0}, {"delta_t", 0.1}, {"edge_alpha", json::array({json::array({"A", "B", 3.0})})}};
  doc["pairs"] = {{"fixed", json::array({json::array({"C", "A"}), json::array({"B", "C"})})},
                  {"beta1", {0.1, 0.3}},
                  {"beta2", {0.2}},
                  {"parasitic_load", {0.0, 0.1}},
                  {"parasitic_count", 1}};
  doc["policies"] = {"greedy", "quad_li"};
  doc["output"] = {{"directory", "out"}, {"trace", "steps"}};
  const ExperimentConfig c = parse_config(doc.dump());
  EXPECT_EQ(c.fixed_pairs[0], std::make_pair(std::string("A"), std::string("C")));
  const std::string echo = config_to_json(c);
  const ExperimentConfig again = parse_config(echo);
  EXPECT_EQ(again, c);
  EXPECT_EQ(config_to_json(again), echo);
  const json parsed = json::parse(echo);
  EXPECT_EQ(parsed["simulation"]["n_steps"], 5000);
  EXPECT_EQ(parsed["pairs"]["route_removal_prob"], 0.5);
}

TEST(Config, SimConfigCarriesSettings) {
  json doc = minimal();
  doc["simulation"] = {{"n_steps", 123}, {"n_runs", 4}, {"seed", 9}, {"solver_node_budget", 77}};
  const ExperimentConfig c = parse_config(doc.dump());
  const SimConfig sim = make_sim_config(c, build_graph(c), 2);
  EXPECT_EQ(sim.n_steps, 123);
  EXPECT_EQ(sim.n_runs, 4);
  EXPECT_EQ(sim.seed, 9u);
  EXPECT_EQ(sim.solver.node_budget, 77);
  EXPECT_EQ(sim.jobs, 2);
  EXPECT_DOUBLE_EQ(sim.eta, 0.9);
  EXPECT_EQ(sim.fixed_pairs.size(), 1u);
}
