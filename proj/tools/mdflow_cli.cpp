// Experiment runner for mirror-descent flows on first-exit-time control
// problems. Subcommands:
//   run      --config <path> [--out <dir>] [--seed <u64>]
//   validate --config <path>
//   version
// Exit codes: 0 success, 1 certificate failure, 2 config error, 3 solver error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mdflow/experiment.hpp"
#include "mdflow/version.hpp"

namespace {

int report_config_errors(const std::vector<mdflow::ConfigError>& errors) {
  for (const auto& e : errors) std::cerr << "config error [" << e.path << "]: " << e.message << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mirror-descent flow experiments for first-exit-time control"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto* run = app.add_subcommand("run", "run an experiment end to end");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (default: out)");
  run->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_given = true;
  });

  auto* validate = app.add_subcommand("validate", "validate a config file");
  validate->add_option("--config", config_path, "experiment config file")->required();

  auto* version = app.add_subcommand("version", "print the version");

  CLI11_PARSE(app, argc, argv);

  if (version->parsed()) {
    std::cout << "mdflow " << mdflow::kVersionString << "\n";
    return 0;
  }

  auto result = mdflow::validate_config(config_path);
  if (!result.config) return report_config_errors(result.errors);

  if (validate->parsed()) {
    std::cout << result.config->normalized_text();
    return 0;
  }

  if (seed_given) result.config->seed = seed;
  try {
    const auto res = mdflow::run_experiment(*result.config, out_dir);
    std::cout << "wrote " << res.out_dir << " (d0_probe=" << res.d0_probe
              << ", clamp=" << res.clamp_magnitude << ", wall=" << res.wall_seconds << "s)\n";
    if (!res.certificates_pass) {
      std::cerr << "certificate failure: see " << res.out_dir << "/certificates.json\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  }
}
