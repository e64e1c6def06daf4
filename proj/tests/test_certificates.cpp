#include <cmath>
#include <vector>

#include "doctest.h"
#include "mdflow/certificates.hpp"
#include "mdflow/rng.hpp"

using namespace mdflow;

namespace {

LQBallInstance lq_1d(double tau, double radius = 1.5) {
  LQBallInstance inst;
  inst.state_dim = inst.action_dim = inst.noise_dim = 1;
  inst.m1 = Mat::scalar(0.2);
  inst.n = Mat::scalar(0.8);
  inst.m2 = Mat::scalar(0.8);
  inst.m3 = Mat::scalar(0.4);
  inst.radius = radius;
  inst.tau = tau;
  return inst;
}

FiniteActionInstance finite_p3(double tau) {
  FiniteActionInstance inst;
  inst.state_dim = 1;
  inst.actions = 3;
  inst.tau = tau;
  inst.reference = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  inst.drift = [](double, std::span<const double>, int action, std::span<double> out) {
    out[0] = 0.8 * (action - 1);
  };
  inst.cost = [](double, std::span<const double> x, int action) {
    return 0.5 * action * x[0] * x[0] + 0.2 * action;
  };
  return inst;
}

Grid box_grid(int nx, int nt, double T = 1.0) {
  GridSpec s;
  s.dim = 1;
  s.lo = {-1.0, 0.0};
  s.hi = {1.0, 1.0};
  s.nx = {nx, 3};
  s.nt = nt;
  s.horizon = T;
  return Grid(s);
}

Field smooth_control(const Grid& grid, double amplitude, double freq, double phase) {
  Field u(grid, 1);
  for (int k = 0; k < grid.levels(); ++k)
    for (int i = 0; i < grid.interior_count(); ++i)
      u.at(k, i) = amplitude * std::sin(freq * grid.coord(0, i) + 0.5 * grid.time_at(k) + phase);
  return u;
}

double sup_abs(const Field& f) {
  double sup = 0.0;
  for (double v : f.raw()) sup = std::max(sup, std::abs(v));
  return sup;
}

FlowTrace synthetic_trace(int n, double ds, auto gap_fn, auto lyap_fn) {
  FlowTrace trace;
  for (int i = 1; i <= n; ++i) {
    FlowRecord rec;
    rec.s = ds * i;
    rec.probe_gap = gap_fn(rec.s);
    rec.sup_gap = rec.probe_gap;
    rec.lyapunov_probe = lyap_fn(rec.s);
    rec.eta = ds;
    trace.records.push_back(rec);
  }
  return trace;
}

}  // namespace

TEST_SUITE("certificates") {

TEST_CASE("performance difference vanishes for identical controls") {
  const auto spec = make_lq_ball_problem(lq_1d(0.5));
  const Grid grid = box_grid(16, 16);
  const Field u = smooth_control(grid, 0.5, 1.3, 0.2);
  const Field res = performance_difference_residual(spec, grid, u, u);
  CHECK(sup_abs(res) <= 1e-12);
}

TEST_CASE("performance difference vanishes when controls cannot matter") {
  ProblemSpec spec;
  spec.state_dim = 1;
  spec.action_dim = 1;
  spec.mirror = MirrorMap::ball(1.0, 1);
  spec.tau = 0.0;
  spec.ellipticity = 0.49;
  spec.minimizer = ProblemSpec::MinimizerKind::Generic;
  spec.drift = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = 0.2 * x[0];
  };
  spec.diffusion_sq = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.49; };
  spec.running_cost = [](double, std::span<const double> x, std::span<const double>) {
    return x[0] * x[0];
  };
  spec.terminal_cost = [](std::span<const double> x) { return 0.3 * x[0] * x[0]; };
  spec.reference_control = [](double, std::span<const double>, std::span<double> out) {
    out[0] = 0.0;
  };
  const Grid grid = box_grid(16, 16);
  const Field u = smooth_control(grid, 0.4, 1.1, 0.1);
  const Field up = smooth_control(grid, 0.6, 2.0, 1.4);
  CHECK(sup_abs(performance_difference_residual(spec, grid, u, up)) <= 1e-8);
}

TEST_CASE("performance difference residual shrinks under grid refinement") {
  const auto spec = make_lq_ball_problem(lq_1d(0.0));
  const auto residual_at = [&](int nx) {
    const Grid grid = box_grid(nx, nx);
    const Field u = smooth_control(grid, 0.7, 1.9, 0.4);
    const Field up = smooth_control(grid, 0.5, 0.9, 2.1);
    const Field fwd = performance_difference_residual(spec, grid, u, up);
    const Field bwd = performance_difference_residual(spec, grid, up, u);
    Field sym(grid, 1);
    for (std::size_t i = 0; i < sym.raw().size(); ++i)
      sym.raw()[i] = fwd.raw()[i] + bwd.raw()[i];
    return std::pair{sup_abs(fwd), sup_abs(sym)};
  };
  const auto [coarse, coarse_sym] = residual_at(24);
  const auto [fine, fine_sym] = residual_at(48);
  CHECK(coarse / fine >= 2.0);
  // both orderings of the identity hold, so the symmetrized residual
  // vanishes under refinement as well
  CHECK(fine_sym < coarse_sym);
  CHECK(coarse_sym <= 2.0 * coarse);
}

TEST_CASE("linear rate certificate on synthetic traces") {
  const double d0 = 2.0;
  // gap identically zero: slack d0/s is never violated
  const auto pass_trace =
      synthetic_trace(40, 0.25, [](double) { return 0.0; }, [](double) { return 0.0; });
  const auto pass = linear_rate_certificate(pass_trace, d0);
  CHECK(pass.pass);
  CHECK(pass.checked_records == 36);  // records with s >= 1
  CHECK(pass.worst_slack > 0.0);

  // gap at twice the bound: fails at every checked record
  const auto fail_trace = synthetic_trace(
      40, 0.25, [=](double s) { return 2.0 * d0 / s; }, [](double) { return 0.0; });
  const auto fail = linear_rate_certificate(fail_trace, d0);
  CHECK_FALSE(fail.pass);
  CHECK(fail.worst_slack < 0.0);

  // pure function: identical inputs, identical report
  const auto again = linear_rate_certificate(fail_trace, d0);
  CHECK(again.pass == fail.pass);
  CHECK(again.worst_s == fail.worst_s);
  CHECK(again.worst_slack == fail.worst_slack);
}

TEST_CASE("exponential rate certificate on synthetic traces") {
  const double d0 = 1.0, lambda = 1.0;
  // start at the optimum: everything is zero and trivially passes
  const auto zero_trace =
      synthetic_trace(30, 0.2, [](double) { return 0.0; }, [](double) { return 0.0; });
  CHECK(exponential_rate_certificate(zero_trace, lambda, 0.0).pass);

  // a Lyapunov value that refuses to decay fails for large s
  const auto stuck = synthetic_trace(
      60, 0.5, [](double) { return 0.0; }, [](double) { return 0.5; });
  const auto fail = exponential_rate_certificate(stuck, lambda, d0);
  CHECK_FALSE(fail.pass);
  REQUIRE(fail.fitted_slope.has_value());
  CHECK(*fail.fitted_slope == doctest::Approx(0.0).epsilon(1e-12));

  // exact theoretical decay passes with allowance to spare
  const auto good = synthetic_trace(
      60, 0.5, [=](double s) { return 0.4 * lambda * d0 / std::expm1(0.5 * lambda * s); },
      [=](double s) { return d0 * std::exp(-0.5 * lambda * s); });
  const auto ok = exponential_rate_certificate(good, lambda, d0);
  CHECK(ok.pass);
  REQUIRE(ok.fitted_slope.has_value());
  CHECK(*ok.fitted_slope == doctest::Approx(-0.5 * lambda).epsilon(1e-9));

  CHECK_THROWS_AS(exponential_rate_certificate(good, 0.0, d0), std::invalid_argument);
}

TEST_CASE("convexity probe margins") {
  const Grid grid = box_grid(8, 8);
  // plain convexity of the quadratic cost
  const auto lq0 = make_lq_ball_problem(lq_1d(0.0));
  CHECK(convexity_probe(lq0, grid, 1000, 0.0) >= -1e-10);
  // relative strong convexity with modulus 2 tau on both instances
  const auto lq5 = make_lq_ball_problem(lq_1d(0.5));
  CHECK(convexity_probe(lq5, grid, 1000, 1.0) >= -1e-10);
  ProblemSpec fa = make_finite_action_problem(finite_p3(0.7));
  fa.diffusion_sq = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.64; };
  fa.ellipticity = 0.64;
  fa.terminal_cost = [](std::span<const double> x) { return x[0] * x[0]; };
  CHECK(convexity_probe(fa, grid, 1000, 2.0 * 0.7) >= -1e-10);
  // an overstated modulus is caught: tau = 0 ball with lambda = 1
  CHECK(convexity_probe(lq0, grid, 1000, 1.0) < 0.0);
}

}  // TEST_SUITE
