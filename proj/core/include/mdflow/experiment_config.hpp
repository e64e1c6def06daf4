#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdflow/grid.hpp"
#include "mdflow/mirror_flow.hpp"
#include "mdflow/problem.hpp"

namespace mdflow {

/// Fully resolved experiment description. Produced by validate_config;
/// defaults are already filled in.
struct ExperimentConfig {
  std::string problem_kind;  // "lq_ball" or "finite_action"
  double tau = 0.0;

  // lq_ball data
  int state_dim = 1;
  Mat m1, m2, m3, n;
  double radius = 1.0;

  // finite_action data (state dimension comes from the grid)
  int actions = 0;
  std::vector<double> a0;
  std::vector<std::vector<double>> beta_table;  // per action: state_dim constants
  std::vector<std::vector<double>> phi_table;   // per action: quadratic table
  std::vector<double> g_table;                  // terminal-cost quadratic table
  double sigma = 1.0;

  GridSpec grid;

  double eta0 = 0.1;
  double flow_horizon = 20.0;
  ProbePoint probe;
  std::string z0_mode = "zero";  // "zero" or "random"
  double z0_scale = 1.0;

  SchemeConfig scheme;
  double allowance = 0.1;
  double clamp_eps = 1e-6;
  std::uint64_t seed = 0;
  std::vector<double> snapshot_s;

  /// Instantiates the problem described by this config.
  ProblemSpec build_problem() const;
  /// Renders the normalized key = value form (sorted keys, full precision).
  std::string normalized_text() const;
};

struct ConfigError {
  std::string path;     // offending field, e.g. "flow.probe"
  std::string message;
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;  // set iff errors is empty
  std::vector<ConfigError> errors;
};

/// Parses and validates a plain-text config: one `key = value` per line,
/// dotted section names, `#` comments. Unknown keys are hard errors; every
/// violation is reported with its field path.
ConfigResult validate_config_text(const std::string& text);
ConfigResult validate_config(const std::string& path);

}  // namespace mdflow
