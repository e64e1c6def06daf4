#pragma once

#include <string>

#include "mdflow/certificates.hpp"
#include "mdflow/experiment_config.hpp"
#include "mdflow/flow_trace.hpp"

namespace mdflow {

struct ExperimentResult {
  bool certificates_pass = false;
  std::string out_dir;
  FlowTrace trace;
  RateReport rate_report;
  double d0_probe = 0.0;
  double clamp_magnitude = 0.0;
  double gauge_deviation = 0.0;  // simplex runs only
  double wall_seconds = 0.0;
};

/// Runs the full pipeline described by a validated config: ground-truth
/// solve, dual anchor, mirror-flow integration, certificates. Writes into
/// `out_dir` (created if missing):
///   Vstar.csv, ustar.csv   ground truth
///   trace.csv              one row per accepted flow step
///   certificates.json      rate/monotonicity/invariance reports
///   config_echo.cfg        normalized configuration
///   manifest.json          seed, version, wall clock
///   u_s_*.csv, V_s_*.csv   snapshots at the configured flow times
/// Only trace.csv and certificates.json are covered by the byte-level
/// determinism guarantee; the manifest carries the wall clock.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace mdflow
