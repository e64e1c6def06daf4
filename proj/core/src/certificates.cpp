#include "mdflow/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mdflow/linalg.hpp"
#include "mdflow/rng.hpp"

namespace mdflow {

Field performance_difference_residual(const ProblemSpec& spec, const Grid& grid, const Field& u,
                                      const Field& u_prime, const SchemeConfig& config) {
  const ScalarField vu = evaluate_policy(spec, grid, u, config);
  const ScalarField vup = evaluate_policy(spec, grid, u_prime, config);
  const Field grad = spatial_gradient(vu);

  Field gap(grid, 1);
  std::vector<double> x(static_cast<std::size_t>(spec.state_dim));
  for (int k = 0; k < grid.levels(); ++k) {
    const double t = grid.time_at(k);
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      grid.node_position(idx, x);
      const auto z = grad.node_values(k, idx);
      gap.at(k, idx) = hamiltonian(spec, t, x, z, u.node_values(k, idx)) -
                       hamiltonian(spec, t, x, z, u_prime.node_values(k, idx));
    }
  }
  const ScalarField rhs = feynman_kac(spec, grid, u_prime, gap, config);

  Field residual(grid, 1);
  for (int k = 0; k < grid.levels(); ++k)
    for (int idx = 0; idx < grid.interior_count(); ++idx)
      residual.at(k, idx) =
          (vu.interior(k, idx) - vup.interior(k, idx)) - rhs.interior(k, idx);
  return residual;
}

RateReport linear_rate_certificate(const FlowTrace& trace, double d0_probe, double allowance,
                                   double clamp_magnitude) {
  RateReport report;
  report.certificate = "linear_rate";
  report.allowance = allowance;
  report.clamp_magnitude = clamp_magnitude;
  report.pass = true;
  double worst_margin = 1e300;
  for (const auto& rec : trace.records) {
    if (rec.s < 1.0) continue;  // the 1/s bound is vacuous near s = 0
    ++report.checked_records;
    const double bound = d0_probe / rec.s;
    const double slack = bound - rec.probe_gap;
    const double margin = slack + allowance * bound;
    if (margin < 0.0) report.pass = false;
    if (margin < worst_margin) {
      worst_margin = margin;
      report.worst_s = rec.s;
      report.worst_slack = slack;
    }
  }
  return report;
}

RateReport exponential_rate_certificate(const FlowTrace& trace, double lambda, double d0_probe,
                                        double allowance, double clamp_magnitude) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("exponential_rate_certificate: lambda must be positive");
  RateReport report;
  report.certificate = "exponential_rate";
  report.allowance = allowance;
  report.clamp_magnitude = clamp_magnitude;
  report.pass = true;
  double worst_margin = 1e300;
  const auto consider = [&](double s, double value, double bound) {
    const double slack = bound - value;
    const double margin = slack + allowance * bound;
    if (margin < 0.0) report.pass = false;
    if (margin < worst_margin) {
      worst_margin = margin;
      report.worst_s = s;
      report.worst_slack = slack;
    }
  };

  double sum_s = 0.0, sum_l = 0.0, sum_ss = 0.0, sum_sl = 0.0;
  int fit_count = 0;
  for (const auto& rec : trace.records) {
    ++report.checked_records;
    const double gap_bound = 0.5 * lambda * d0_probe / std::expm1(0.5 * lambda * rec.s);
    consider(rec.s, rec.probe_gap, gap_bound);
    if (rec.lyapunov_probe >= 1e-12) {  // skip once the Lyapunov value degenerates
      consider(rec.s, rec.lyapunov_probe, std::exp(-0.5 * lambda * rec.s) * d0_probe);
      const double l = std::log(rec.lyapunov_probe);
      sum_s += rec.s;
      sum_l += l;
      sum_ss += rec.s * rec.s;
      sum_sl += rec.s * l;
      ++fit_count;
    }
  }
  if (fit_count >= 2) {
    const double denom = fit_count * sum_ss - sum_s * sum_s;
    if (denom > 0.0) report.fitted_slope = (fit_count * sum_sl - sum_s * sum_l) / denom;
  }
  return report;
}

namespace {

void sample_interior_action(const MirrorMap& mirror, Rng& rng, double boundary_margin,
                            std::span<double> a) {
  const int p = mirror.dim();
  if (mirror.kind() == MirrorMap::Kind::Ball) {
    double n2 = 0.0;
    for (int i = 0; i < p; ++i) {
      a[static_cast<std::size_t>(i)] = rng.normal();
      n2 += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
    }
    const double r = mirror.radius() * (1.0 - boundary_margin) *
                     std::pow(rng.uniform(), 1.0 / p) / std::sqrt(std::max(n2, 1e-300));
    for (int i = 0; i < p; ++i) a[static_cast<std::size_t>(i)] *= r;
    return;
  }
  double sum = 0.0;
  for (int i = 0; i < p; ++i) {
    double e = -std::log(std::max(rng.uniform(), 1e-300));
    a[static_cast<std::size_t>(i)] = e;
    sum += e;
  }
  for (int i = 0; i < p; ++i) {
    const auto k = static_cast<std::size_t>(i);
    a[k] = 0.99 * a[k] / sum + 0.01 / p;
  }
}

}  // namespace

double convexity_probe(const ProblemSpec& spec, const Grid& grid, int n_samples, double lambda,
                       const ConvexityProbeOptions& opts) {
  if (n_samples < 1) throw std::invalid_argument("convexity_probe: n_samples must be >= 1");
  Rng rng(opts.seed);
  const int d = spec.state_dim, p = spec.action_dim;
  std::vector<double> x(static_cast<std::size_t>(d)), z(static_cast<std::size_t>(d));
  std::vector<double> a(static_cast<std::size_t>(p)), ap(static_cast<std::size_t>(p));
  std::vector<double> g(static_cast<std::size_t>(p));
  double min_margin = 1e300;
  for (int sample = 0; sample < n_samples; ++sample) {
    const double t = rng.uniform(0.0, grid.horizon());
    for (int ax = 0; ax < d; ++ax)
      x[static_cast<std::size_t>(ax)] = rng.uniform(grid.lo(ax), grid.hi(ax));
    for (int ax = 0; ax < d; ++ax)
      z[static_cast<std::size_t>(ax)] = rng.uniform(-opts.z_radius, opts.z_radius);
    sample_interior_action(spec.mirror, rng, opts.boundary_margin, a);
    sample_interior_action(spec.mirror, rng, opts.boundary_margin, ap);

    const double h_a = hamiltonian(spec, t, x, z, a);
    const double h_ap = hamiltonian(spec, t, x, z, ap);
    hamiltonian_grad_action(spec, t, x, z, ap, g);
    double cross = 0.0;
    for (int i = 0; i < p; ++i) {
      const auto k = static_cast<std::size_t>(i);
      cross += g[k] * (a[k] - ap[k]);
    }
    const double margin = h_a - h_ap - cross - 0.5 * lambda * spec.mirror.bregman(a, ap);
    min_margin = std::min(min_margin, margin);
  }
  return min_margin;
}

}  // namespace mdflow
