#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qnet/config.hpp"
#include "qnet/experiment.hpp"

using namespace qnet;
namespace fs = std::filesystem;

namespace {

const char* kChainConfig = R"({
  "topology": {"kind": "custom", "edges": [["A", "B", 1.0], ["B", "C", 1.0], ["C", "D", 1.0]]},
  "physics": {"eta": 0.9},
  "pairs": {"fixed": [["A", "D"], ["B", "D"]], "beta1": [0.1, 0.3], "beta2": [0.1, 0.3], "parasitic_count": 0},
  "policies": ["greedy", "mw_fi"],
  "simulation": {"n_steps": 200, "n_runs": 2, "seed": 7},
  "output": {"directory": "unused"}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("qnet_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  ExperimentReport run(const fs::path& out, std::optional<int> max_cells = std::nullopt,
                       const std::string& text = kChainConfig) {
    ExperimentOptions options;
    options.out_dir = out;
    options.max_cells = max_cells;
    return run_experiment(parse_config(text), options);
  }

  fs::path root_;
};

}  // namespace

TEST_F(ExperimentTest, WritesOneCsvPerPolicyAndLoad) {
  const auto report = run(root_ / "a");
  ASSERT_EQ(report.csv_files.size(), 2u);
  EXPECT_TRUE(report.complete);
  int rows = 0;
  for (const auto& f : report.csv_files) {
    const auto content = lines(slurp(f));
    ASSERT_FALSE(content.empty());
    EXPECT_EQ(content[0], kCsvHeader);
    rows += static_cast<int>(content.size()) - 1;
  }
  EXPECT_EQ(rows, 8);
  EXPECT_TRUE(fs::exists(root_ / "a" / grid_file_name(PolicyKind::greedy, 0.0)));
  EXPECT_TRUE(fs::exists(root_ / "a" / grid_file_name(PolicyKind::mw_fi, 0.0)));
}

TEST_F(ExperimentTest, CsvRowsParseBack) {
  const auto report = run(root_ / "a");
  for (const auto& f : report.csv_files) {
    const auto content = lines(slurp(f));
    for (std::size_t k = 1; k < content.size(); ++k) {
      std::vector<std::string> fields;
      std::stringstream row(content[k]);
      for (std::string cell; std::getline(row, cell, ',');) fields.push_back(cell);
      ASSERT_EQ(fields.size(), 7u);
      const double b1 = std::stod(fields[0]);
      EXPECT_TRUE(b1 == 0.1 || b1 == 0.3);
      EXPECT_GE(std::stod(fields[2]), 0.0);
      EXPECT_NO_THROW(parse_stability_label(fields[4]));
      EXPECT_EQ(std::to_string(std::stoll(fields[3])), fields[3]);
    }
  }
}

TEST_F(ExperimentTest, RerunIsByteIdentical) {
  const auto first = run(root_ / "a");
  const auto second = run(root_ / "b");
  for (std::size_t k = 0; k < first.csv_files.size(); ++k) {
    EXPECT_EQ(slurp(first.csv_files[k]), slurp(second.csv_files[k]));
  }
}

TEST_F(ExperimentTest, ResumedRunEqualsUninterrupted) {
  const auto full = run(root_ / "full");
  const auto partial = run(root_ / "resumed", 3);
  EXPECT_FALSE(partial.complete);
  EXPECT_EQ(partial.cells_evaluated, 3);
  const auto resumed = run(root_ / "resumed");
  EXPECT_TRUE(resumed.complete);
  EXPECT_LE(resumed.cells_evaluated, 5);
  for (std::size_t k = 0; k < full.csv_files.size(); ++k) {
    EXPECT_EQ(slurp(full.csv_files[k]), slurp(resumed.csv_files[k]));
  }
}

TEST_F(ExperimentTest, CacheFromOtherConfigIsIgnored) {
  run(root_ / "a", 2);
  std::string other = kChainConfig;
  other.replace(other.find("\"seed\": 7"), 9, "\"seed\": 8");
  const auto report = run(root_ / "a", std::nullopt, other);
  const auto fresh = run(root_ / "b", std::nullopt, other);
  EXPECT_EQ(report.cells_evaluated, fresh.cells_evaluated);
  for (std::size_t k = 0; k < report.csv_files.size(); ++k) {
    EXPECT_EQ(slurp(report.csv_files[k]), slurp(fresh.csv_files[k]));
  }
}

TEST_F(ExperimentTest, SummaryEchoesEffectiveConfig) {
  run(root_ / "a");
  const auto summary = nlohmann::json::parse(slurp(root_ / "a" / "summary.json"));
  EXPECT_TRUE(summary["complete"].get<bool>());
  EXPECT_EQ(summary["seeds"]["master"], 7);
  EXPECT_EQ(summary["config"]["pairs"]["route_removal_prob"], 0.5);
  EXPECT_EQ(parse_config(summary["config"].dump()), parse_config(kChainConfig));
  EXPECT_TRUE(summary.contains("wall_time_s"));
  EXPECT_EQ(summary["policies"].size(), 2u);
}

TEST_F(ExperimentTest, StepTracesAreNdjson) {
  std::string text = kChainConfig;
  text.replace(text.find("\"directory\": \"unused\""), 21, "\"directory\": \"unused\", \"trace\": \"steps\"");
  run(root_ / "a", std::nullopt, text);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root_ / "a")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) != 0) continue;
    ++files;
    const auto content = lines(slurp(entry.path()));
    ASSERT_FALSE(content.empty());
    for (const auto& l : content) EXPECT_NO_THROW((void)nlohmann::json::parse(l));
  }
  EXPECT_GT(files, 0);
}

TEST_F(ExperimentTest, CliExitCodes) {
  const fs::path good = root_ / "good.json";
  std::ofstream(good) << kChainConfig;
  const fs::path bad = root_ / "bad.json";
  std::string broken = kChainConfig;
  broken.replace(broken.find("\"eta\": 0.9"), 10, "\"eta\": 1.2");
  std::ofstream(bad) << broken;
  const std::string exe = QNET_SIM_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("--config " + good.string() + " --out " + (root_ / "cli").string()), 0);
  EXPECT_TRUE(fs::exists(root_ / "cli" / "summary.json"));
  EXPECT_EQ(status("--config " + bad.string() + " --out " + (root_ / "cli2").string()), 1);
  EXPECT_EQ(status("--config " + (root_ / "missing.json").string()), 1);
  EXPECT_EQ(status("--bogus-flag"), 1);
  EXPECT_EQ(status("--help"), 0);
}
