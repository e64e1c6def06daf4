#include "mdflow/experiment.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "mdflow/csv_io.hpp"
#include "mdflow/hjb.hpp"
#include "mdflow/rng.hpp"
#include "mdflow/version.hpp"

namespace mdflow {

namespace {

using nlohmann::json;

Field build_initial_dual(const ExperimentConfig& cfg, const Grid& grid, int action_dim) {
  Field dual(grid, action_dim, 0.0);
  if (cfg.z0_mode == "random") {
    Rng rng(cfg.seed);
    for (double& v : dual.raw()) v = cfg.z0_scale * (2.0 * rng.uniform() - 1.0);
  }
  return dual;
}

json rate_report_json(const RateReport& r) {
  json j;
  j["certificate"] = r.certificate;
  j["pass"] = r.pass;
  j["worst_s"] = r.worst_s;
  j["worst_slack"] = r.worst_slack;
  j["allowance"] = r.allowance;
  j["clamp_magnitude"] = r.clamp_magnitude;
  j["checked_records"] = r.checked_records;
  if (r.fitted_slope) j["fitted_slope"] = *r.fitted_slope;
  return j;
}

std::string snap_tag(double s) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%g", s);
  std::string tag = buf.data();
  for (char& c : tag)
    if (c == '.') c = 'p';
  return tag;
}

/// Max deviation of the control trajectory under a constant dual shift
/// along the all-ones direction (softmax gauge freedom), over a few steps.
double simplex_gauge_deviation(const ExperimentConfig& cfg, const ProblemSpec& spec,
                               const Grid& grid, const Field& dual0, int steps) {
  const double shift = 0.7;
  Field dual_shifted(grid, spec.action_dim);
  for (std::size_t i = 0; i < dual0.raw().size(); ++i)
    dual_shifted.raw()[i] = dual0.raw()[i] + shift;

  FlowState a(grid, spec.action_dim, cfg.eta0), b(grid, spec.action_dim, cfg.eta0);
  for (std::size_t i = 0; i < dual0.raw().size(); ++i) {
    a.dual.raw()[i] = dual0.raw()[i];
    b.dual.raw()[i] = dual_shifted.raw()[i];
  }
  double dev = 0.0;
  for (int step = 0; step < steps; ++step) {
    const Field ua = control_from_dual(spec.mirror, a.dual);
    const Field ub = control_from_dual(spec.mirror, b.dual);
    for (std::size_t i = 0; i < ua.raw().size(); ++i)
      dev = std::max(dev, std::abs(ua.raw()[i] - ub.raw()[i]));
    auto sa = flow_step(a, spec, grid, cfg.probe, cfg.scheme);
    auto sb = flow_step(b, spec, grid, cfg.probe, cfg.scheme);
    a = std::move(sa.next);
    b = std::move(sb.next);
  }
  return dev;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  const Grid grid(cfg.grid);
  const ProblemSpec spec = cfg.build_problem();
  spec.validate_on(grid);

  {
    std::ofstream echo(path("config_echo.cfg"));
    echo << cfg.normalized_text();
  }

  // Ground truth and the dual anchor.
  const HjbResult hjb = solve_hjb(spec, grid, cfg.scheme);
  write_scalar_field_csv(path("Vstar.csv"), hjb.value);
  write_field_csv(path("ustar.csv"), hjb.control);
  const DualFromControlResult anchor = dual_from_control(spec.mirror, hjb.control, cfg.clamp_eps);

  // Mirror flow.
  const Field dual0 = build_initial_dual(cfg, grid, spec.action_dim);
  ExperimentResult res;
  res.out_dir = out_dir;
  res.clamp_magnitude = anchor.clamp_magnitude;
  const ScalarField d0_field = lyapunov_field(spec, grid, dual0, anchor.dual, cfg.scheme);
  res.d0_probe = d0_field.interior(grid.nearest_time_level(cfg.probe.t),
                                   grid.nearest_interior_node(std::span<const double>(
                                       cfg.probe.x.data(), static_cast<std::size_t>(grid.dim()))));

  FlowOptions opts;
  opts.horizon = cfg.flow_horizon;
  opts.eta0 = cfg.eta0;
  opts.probe = cfg.probe;
  opts.snapshot_s = cfg.snapshot_s;
  if (!cfg.snapshot_s.empty()) {
    opts.on_snapshot = [&](double s, const Field& control, const ScalarField& value) {
      write_field_csv(path("u_s_" + snap_tag(s) + ".csv"), control);
      write_scalar_field_csv(path("V_s_" + snap_tag(s) + ".csv"), value);
    };
  }
  res.trace = run_flow(dual0, opts, spec, grid, hjb.value, &anchor.dual, cfg.scheme);
  write_trace_csv(path("trace.csv"), res.trace);

  // Certificates.
  json certs;
  double max_mono = 0.0, worst_tol = 0.0;
  for (const auto& rec : res.trace.records) {
    max_mono = std::max(max_mono, rec.mono_violation);
    worst_tol = std::max(worst_tol, 1e-8 + 10.0 * rec.eta * rec.eta);
  }
  const bool mono_pass = res.trace.backtrack_failures == 0;
  certs["monotone_decrease"] = {{"pass", mono_pass},
                                {"max_violation", max_mono},
                                {"step_tolerance", worst_tol},
                                {"backtrack_failures", res.trace.backtrack_failures},
                                {"total_halvings", res.trace.total_halvings}};

  if (cfg.tau > 0.0) {
    res.rate_report = exponential_rate_certificate(res.trace, 2.0 * cfg.tau, res.d0_probe,
                                                   cfg.allowance, anchor.clamp_magnitude);
    certs["exponential_rate"] = rate_report_json(res.rate_report);
    certs["exponential_rate"]["lambda"] = 2.0 * cfg.tau;
  } else {
    res.rate_report =
        linear_rate_certificate(res.trace, res.d0_probe, cfg.allowance, anchor.clamp_magnitude);
    certs["linear_rate"] = rate_report_json(res.rate_report);
  }
  certs["d0_probe"] = res.d0_probe;

  if (spec.mirror.kind() == MirrorMap::Kind::Simplex) {
    res.gauge_deviation = simplex_gauge_deviation(cfg, spec, grid, dual0, 3);
    certs["gauge_invariance"] = {{"pass", res.gauge_deviation <= 1e-12},
                                 {"max_deviation", res.gauge_deviation}};
  }

  res.certificates_pass = mono_pass && res.rate_report.pass &&
                          (spec.mirror.kind() != MirrorMap::Kind::Simplex ||
                           res.gauge_deviation <= 1e-12);
  {
    std::ofstream out(path("certificates.json"));
    out << certs.dump(2) << "\n";
  }

  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  json manifest;
  manifest["version"] = kVersionString;
  manifest["seed"] = cfg.seed;
  manifest["wall_seconds"] = res.wall_seconds;
  manifest["problem_kind"] = cfg.problem_kind;
  json nxj = json::array({grid.nx(0)});
  if (grid.dim() == 2) nxj.push_back(grid.nx(1));
  manifest["grid"] = {{"dim", grid.dim()}, {"nx", nxj}, {"nt", grid.nt()}, {"T", grid.horizon()}};
  manifest["clamp"] = {{"fired", anchor.clamped}, {"magnitude", anchor.clamp_magnitude}};
  manifest["hjb"] = {{"max_residual", hjb.max_residual},
                     {"max_policy_rounds", hjb.max_rounds_used}};
  {
    std::ofstream out(path("manifest.json"));
    out << manifest.dump(2) << "\n";
  }
  return res;
}

}  // namespace mdflow
