#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "mdflow/csv_io.hpp"
#include "mdflow/hjb.hpp"
#include "mdflow/mirror_flow.hpp"
#include "mdflow/monte_carlo.hpp"
#include "mdflow/rng.hpp"

using namespace mdflow;

namespace {

LQBallInstance lq_1d(double tau, double radius = 1.0) {
  LQBallInstance inst;
  inst.state_dim = inst.action_dim = inst.noise_dim = 1;
  inst.m1 = Mat::scalar(0.3);
  inst.n = Mat::scalar(1.0);
  inst.m2 = Mat::scalar(0.7);
  inst.m3 = Mat::scalar(0.5);
  inst.radius = radius;
  inst.tau = tau;
  return inst;
}

FiniteActionInstance finite_p3(double tau = 0.5) {
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

ProblemSpec finite_spec(double tau = 0.5) {
  ProblemSpec spec = make_finite_action_problem(finite_p3(tau));
  spec.diffusion_sq = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.64; };
  spec.diffusion_sq_const = std::vector<double>{0.64};
  spec.ellipticity = 0.64;
  spec.terminal_cost = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
  return spec;
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

Field smooth_dual(const Grid& grid, int comps, double scale) {
  Field z(grid, comps);
  for (int k = 0; k < grid.levels(); ++k)
    for (int i = 0; i < grid.interior_count(); ++i)
      for (int c = 0; c < comps; ++c)
        z.at(k, i, c) =
            scale * std::sin(1.7 * grid.coord(0, i) + 0.3 * grid.time_at(k) + 0.9 * c);
  return z;
}

ProbePoint center_probe() {
  ProbePoint p;
  p.t = 0.0;
  p.x = {0.0, 0.0};
  return p;
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("accepted step moves the dual by exactly -eta * velocity") {
  const auto spec = make_lq_ball_problem(lq_1d(0.5));
  const Grid grid = box_grid(16, 16);
  FlowState state(grid, 1, 0.1);
  const Field z0 = smooth_dual(grid, 1, 0.4);
  for (std::size_t i = 0; i < z0.raw().size(); ++i) state.dual.raw()[i] = z0.raw()[i];

  const auto step = flow_step(state, spec, grid, center_probe());
  REQUIRE(step.halvings == 0);
  CHECK(step.next.s == doctest::Approx(0.1));
  for (std::size_t i = 0; i < z0.raw().size(); ++i)
    CHECK(step.next.dual.raw()[i] == state.dual.raw()[i] - 0.1 * step.velocity.raw()[i]);
}

TEST_CASE("a horizon shorter than the step size yields one shortened step") {
  const auto spec = make_lq_ball_problem(lq_1d(0.0));
  const Grid grid = box_grid(12, 12);
  const auto hjb = solve_hjb(spec, grid);
  FlowOptions opts;
  opts.horizon = 0.05;
  opts.eta0 = 0.1;
  opts.probe = center_probe();
  const Field z0(grid, 1, 0.0);
  const FlowTrace trace = run_flow(z0, opts, spec, grid, hjb.value, nullptr);
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.records[0].s == doctest::Approx(0.05));
}

TEST_CASE("probe value is non-increasing along the flow within tolerance") {
  const auto spec = make_lq_ball_problem(lq_1d(0.0));
  const Grid grid = box_grid(24, 24);
  const auto hjb = solve_hjb(spec, grid);
  FlowOptions opts;
  opts.horizon = 2.0;
  opts.eta0 = 0.1;
  opts.probe = center_probe();
  const Field z0(grid, 1, 0.0);
  const FlowTrace trace = run_flow(z0, opts, spec, grid, hjb.value, nullptr);
  REQUIRE(trace.records.size() >= 20);
  CHECK(trace.backtrack_failures == 0);
  double prev_gap = 1e300;
  for (const auto& rec : trace.records) {
    const double tol = 1e-8 + 10.0 * rec.eta * rec.eta;
    CHECK(rec.mono_violation <= tol);
    CHECK(rec.probe_gap <= prev_gap + tol);
    prev_gap = rec.probe_gap;
    CHECK(rec.sup_gap >= rec.probe_gap);
  }
  // s must be strictly increasing
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].s > trace.records[i - 1].s);
}

TEST_CASE("lyapunov field: zero at the anchor, nonnegative, matches monte carlo") {
  const auto spec = make_lq_ball_problem(lq_1d(0.5));
  const Grid grid = box_grid(48, 64);
  const Field zstar = smooth_dual(grid, 1, 0.6);

  const ScalarField at_anchor = lyapunov_field(spec, grid, zstar, zstar);
  for (int k = 0; k < grid.levels(); ++k)
    for (int i = 0; i < grid.interior_count(); ++i)
      CHECK(std::abs(at_anchor.interior(k, i)) <= 1e-12);

  const Field z = smooth_dual(grid, 1, -0.9);
  const ScalarField lyap = lyapunov_field(spec, grid, z, zstar);
  for (int k = 0; k < grid.levels(); ++k)
    for (int i = 0; i < grid.interior_count(); ++i) CHECK(lyap.interior(k, i) >= -1e-9);

  // Independent path-integral oracle: simulate the anchor dynamics and
  // accumulate the interpolated dual Bregman gap as a running cost.
  Field source(grid, 1);
  for (int k = 0; k < grid.levels(); ++k)
    for (int i = 0; i < grid.interior_count(); ++i)
      source.at(k, i) = spec.mirror.bregman_dual(z.node_values(k, i), zstar.node_values(k, i));
  ProblemSpec oracle = spec;
  oracle.tau = 0.0;
  oracle.running_cost = [&grid, &source](double t, std::span<const double> x,
                                         std::span<const double>) {
    const int level = std::min(static_cast<int>(t / grid.dt()), grid.nt() - 1);
    double r = (x[0] - grid.lo(0)) / grid.dx(0) - 1.0;
    r = std::clamp(r, 0.0, static_cast<double>(grid.nx(0) - 1));
    const int i0 = std::min(static_cast<int>(r), grid.nx(0) - 2);
    const double w = r - i0;
    return (1.0 - w) * source.at(level, i0) + w * source.at(level, i0 + 1);
  };
  oracle.terminal_cost = [](std::span<const double>) { return 0.0; };
  const Field anchor_control = control_from_dual(spec.mirror, zstar);
  const std::vector<double> x0{0.0};
  const auto est = monte_carlo_value(oracle, grid, anchor_control, 0.0, x0, 20000, 2e-4, 4242);
  const int node = grid.nearest_interior_node(x0);
  CHECK(std::abs(lyap.interior(0, node) - est.mean) <= 3.0 * est.std_error + 1e-2);
}

TEST_CASE("constant dual shifts leave the simplex flow invariant") {
  const auto spec = finite_spec();
  const Grid grid = box_grid(16, 16);
  FlowState a(grid, 3, 0.1), b(grid, 3, 0.1);
  const Field z0 = smooth_dual(grid, 3, 0.5);
  for (std::size_t i = 0; i < z0.raw().size(); ++i) {
    a.dual.raw()[i] = z0.raw()[i];
    b.dual.raw()[i] = z0.raw()[i] + 0.7;
  }
  for (int step = 0; step < 3; ++step) {
    const Field ua = control_from_dual(spec.mirror, a.dual);
    const Field ub = control_from_dual(spec.mirror, b.dual);
    for (std::size_t i = 0; i < ua.raw().size(); ++i)
      CHECK(std::abs(ua.raw()[i] - ub.raw()[i]) <= 1e-12);
    auto sa = flow_step(a, spec, grid, center_probe());
    auto sb = flow_step(b, spec, grid, center_probe());
    for (int k = 0; k < grid.levels(); ++k)
      for (int i = 0; i < grid.interior_count(); ++i)
        CHECK(std::abs(sa.next_value.interior(k, i) - sb.next_value.interior(k, i)) <= 1e-12);
    a = std::move(sa.next);
    b = std::move(sb.next);
  }
}

TEST_CASE("the flow is stationary at the interior optimum") {
  const auto spec = make_lq_ball_problem(lq_1d(0.5));
  const Grid grid = box_grid(32, 32);
  const auto hjb = solve_hjb(spec, grid);
  const auto anchor = dual_from_control(spec.mirror, hjb.control, 1e-6);
  CHECK_FALSE(anchor.clamped);  // the barrier keeps the optimum interior
  const auto driver = flow_driver(spec, grid, anchor.dual);
  double sup = 0.0;
  for (double g : driver.velocity.raw()) sup = std::max(sup, std::abs(g));
  CHECK(sup <= 1e-4);
}

TEST_CASE("value-derivative identity: sign structure and refinement") {
  const auto spec = make_lq_ball_problem(lq_1d(0.5));
  const auto residual_sup = [&](int nx, int nt, double eta) {
    const Grid grid = box_grid(nx, nt);
    FlowState state(grid, 1, eta);
    const Field z = smooth_dual(grid, 1, 0.7);
    for (std::size_t i = 0; i < z.raw().size(); ++i) state.dual.raw()[i] = z.raw()[i];

    // The expectation side alone must be nonpositive up to solver slack:
    // PSD quadratic-form source plus the maximum principle.
    const auto driver = flow_driver(spec, grid, state.dual);
    Field qsource(grid, 1);
    std::vector<double> hess(1);
    for (int k = 0; k < grid.levels(); ++k) {
      for (int i = 0; i < grid.interior_count(); ++i) {
        spec.mirror.conjugate_hess(state.dual.node_values(k, i), hess);
        const double g = driver.velocity.at(k, i, 0);
        qsource.at(k, i) = g * hess[0] * g;
      }
    }
    const ScalarField expectation = feynman_kac(spec, grid, driver.control, qsource);
    for (int k = 0; k < grid.levels(); ++k)
      for (int i = 0; i < grid.interior_count(); ++i)
        CHECK(-expectation.interior(k, i) <= 1e-9);

    const Field res = value_derivative_residual(spec, grid, state);
    double sup = 0.0;
    for (double v : res.raw()) sup = std::max(sup, std::abs(v));
    return sup;
  };
  const double coarse = residual_sup(17, 16, 0.08);
  const double fine = residual_sup(35, 32, 0.04);
  CHECK(fine > 0.0);
  CHECK(coarse / fine >= 2.0);
}

TEST_CASE("trace csv round trip") {
  FlowTrace trace;
  Rng rng(97);
  for (int i = 0; i < 10; ++i) {
    FlowRecord rec;
    rec.s = 0.1 * (i + 1);
    rec.sup_gap = rng.uniform(0.0, 2.0);
    rec.probe_gap = rng.uniform(0.0, 1.0);
    rec.lyapunov_probe = rng.uniform(0.0, 1.0);
    rec.grad_sup = rng.uniform(0.0, 3.0);
    rec.eta = 0.1;
    rec.mono_violation = 0.0;
    trace.records.push_back(rec);
  }
  const auto tmp = std::filesystem::temp_directory_path() / "mdflow_trace_roundtrip.csv";
  write_trace_csv(tmp.string(), trace);
  const FlowTrace back = read_trace_csv(tmp.string());
  REQUIRE(back.records.size() == trace.records.size());
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    CHECK(back.records[i].s == trace.records[i].s);
    CHECK(back.records[i].sup_gap == trace.records[i].sup_gap);
    CHECK(back.records[i].probe_gap == trace.records[i].probe_gap);
    CHECK(back.records[i].lyapunov_probe == trace.records[i].lyapunov_probe);
    CHECK(back.records[i].grad_sup == trace.records[i].grad_sup);
    CHECK(back.records[i].eta == trace.records[i].eta);
    CHECK(back.records[i].mono_violation == trace.records[i].mono_violation);
  }
  std::filesystem::remove(tmp);
}

}  // TEST_SUITE
