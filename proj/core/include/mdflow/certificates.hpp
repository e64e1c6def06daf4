#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mdflow/flow_trace.hpp"
#include "mdflow/mirror_flow.hpp"
#include "mdflow/parabolic.hpp"

namespace mdflow {

/// Pointwise residual of the performance-difference identity
///   V^u - V^{u'} = E^{u'} integral [H(., grad V^u, u) - H(., grad V^u, u')].
/// The left side is two policy evaluations; the right side a Feynman-Kac
/// solve of the Hamiltonian gap under the u' dynamics. Vanishes as the grid
/// refines; the sup-norm decay rate is itself a scheme diagnostic.
Field performance_difference_residual(const ProblemSpec& spec, const Grid& grid, const Field& u,
                                      const Field& u_prime, const SchemeConfig& config = {});

struct RateReport {
  std::string certificate;  // "linear_rate" or "exponential_rate"
  bool pass = false;
  double worst_s = 0.0;
  double worst_slack = 0.0;
  std::optional<double> fitted_slope;  // exponential only: LS slope of log D vs s
  double allowance = 0.1;
  double clamp_magnitude = 0.0;
  int checked_records = 0;
};

/// Linear-rate certificate: probe_gap <= (1+allowance) * d0/s for every
/// trace record with s >= 1 (d0 = Lyapunov value at the probe at s=0).
RateReport linear_rate_certificate(const FlowTrace& trace, double d0_probe,
                                   double allowance = 0.1, double clamp_magnitude = 0.0);

/// Exponential-rate certificate with modulus lambda:
///   probe_gap <= (1+allowance) * (lambda/2) d0 / (exp(lambda s/2) - 1)
///   lyapunov  <= (1+allowance) * exp(-lambda s/2) d0   (records above 1e-12)
/// plus the least-squares slope of log(lyapunov) against s.
RateReport exponential_rate_certificate(const FlowTrace& trace, double lambda, double d0_probe,
                                        double allowance = 0.1, double clamp_magnitude = 0.0);

struct ConvexityProbeOptions {
  double z_radius = 5.0;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  double boundary_margin = 0.05;  // fraction of the ball radius kept clear
};

/// Minimum over random samples (t, x, z, a, a') of
///   H(a) - H(a') - grad_a H(a').(a-a') - (lambda/2) D_psi(a|a').
/// Nonnegative (to roundoff) when the Hamiltonian is lambda-relatively
/// strongly convex; a negative return exhibits a violating sample.
double convexity_probe(const ProblemSpec& spec, const Grid& grid, int n_samples, double lambda,
                       const ConvexityProbeOptions& opts = {});

}  // namespace mdflow
