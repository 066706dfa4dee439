// qnet-sim: run a stability-region experiment described by a JSON config.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <iostream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "qnet/config.hpp"
#include "qnet/errors.hpp"
#include "qnet/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Entanglement-swapping network scheduling simulator"};
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::string log_level = "info";
  app.add_option("--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log", log_level, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("qnet"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  qnet::ExperimentConfig config;
  try {
    config = qnet::load_config(config_path);
  } catch (const qnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    qnet::ExperimentOptions options;
    if (!out_dir.empty()) options.out_dir = out_dir;
    options.jobs = jobs;
    const auto report = qnet::run_experiment(config, options);
    for (const auto& f : report.csv_files) std::cout << f.string() << "\n";
    std::cout << (report.out_dir / "summary.json").string() << "\n";
  } catch (const qnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
