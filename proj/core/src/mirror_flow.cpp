#include "mdflow/mirror_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdflow/linalg.hpp"

namespace mdflow {

namespace {

double mono_tolerance(double eta) { return 1e-8 + 10.0 * eta * eta; }

struct ProbeNode {
  int level;
  int node;
};

ProbeNode snap_probe(const Grid& grid, const ProbePoint& probe) {
  std::span<const double> x(probe.x.data(), static_cast<std::size_t>(grid.dim()));
  if (!grid.contains(x)) throw std::invalid_argument("probe point outside the domain");
  if (probe.t < 0.0 || probe.t > grid.horizon())
    throw std::invalid_argument("probe time outside the horizon");
  return {grid.nearest_time_level(probe.t), grid.nearest_interior_node(x)};
}

}  // namespace

Field control_from_dual(const MirrorMap& mirror, const Field& dual) {
  const Grid& grid = dual.grid();
  Field control(grid, dual.components());
  std::vector<double> u(static_cast<std::size_t>(dual.components()));
  for (int k = 0; k < grid.levels(); ++k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      mirror.conjugate_grad(dual.node_values(k, idx), u);
      auto dst = control.node_values(k, idx);
      std::copy(u.begin(), u.end(), dst.begin());
    }
  }
  return control;
}

FlowDriver flow_driver(const ProblemSpec& spec, const Grid& grid, const Field& dual,
                       const SchemeConfig& config, const ScalarField* value_hint) {
  dual.require_finite("flow_driver dual");
  FlowDriver out{control_from_dual(spec.mirror, dual),
                 value_hint ? *value_hint : ScalarField(grid), Field(grid, spec.action_dim)};
  if (!value_hint) out.value = evaluate_policy(spec, grid, out.control, config);
  const Field grad = spatial_gradient(out.value);
  std::vector<double> x(static_cast<std::size_t>(spec.state_dim));
  std::vector<double> g(static_cast<std::size_t>(spec.action_dim));
  for (int k = 0; k < grid.levels(); ++k) {
    const double t = grid.time_at(k);
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      grid.node_position(idx, x);
      hamiltonian_grad_action(spec, t, x, grad.node_values(k, idx),
                              out.control.node_values(k, idx), g);
      auto dst = out.velocity.node_values(k, idx);
      std::copy(g.begin(), g.end(), dst.begin());
    }
  }
  out.velocity.require_finite("flow_driver velocity");
  return out;
}

FlowStepResult flow_step(const FlowState& state, const ProblemSpec& spec, const Grid& grid,
                         const ProbePoint& probe, const SchemeConfig& config,
                         const ScalarField* value_hint, int max_halvings, double eta_cap) {
  const ProbeNode pn = snap_probe(grid, probe);
  FlowDriver driver = flow_driver(spec, grid, state.dual, config, value_hint);
  const double probe_before = driver.value.interior(pn.level, pn.node);

  double eta = std::min(state.eta, eta_cap);
  for (int attempt = 0; attempt <= max_halvings; ++attempt) {
    FlowState next(grid, spec.action_dim, eta);
    next.s = state.s + eta;
    for (std::size_t i = 0; i < state.dual.raw().size(); ++i)
      next.dual.raw()[i] = state.dual.raw()[i] - eta * driver.velocity.raw()[i];
    ScalarField next_value =
        evaluate_policy(spec, grid, control_from_dual(spec.mirror, next.dual), config);
    const double probe_after = next_value.interior(pn.level, pn.node);
    if (probe_after <= probe_before + mono_tolerance(eta)) {
      FlowStepResult res{std::move(next), std::move(driver.value), std::move(next_value),
                         std::move(driver.velocity)};
      res.halvings = attempt;
      res.mono_violation = std::max(0.0, probe_after - probe_before);
      return res;
    }
    eta *= 0.5;
  }
  throw std::runtime_error("flow_step: step size underflow after " + std::to_string(max_halvings) +
                           " halvings at s = " + std::to_string(state.s));
}

FlowTrace run_flow(const Field& dual0, const FlowOptions& opts, const ProblemSpec& spec,
                   const Grid& grid, const ScalarField& value_star, const Field* dual_star,
                   const SchemeConfig& config) {
  if (!(opts.horizon > 0.0)) throw std::invalid_argument("run_flow: horizon must be positive");
  if (!(opts.eta0 > 0.0)) throw std::invalid_argument("run_flow: eta0 must be positive");
  const ProbeNode pn = snap_probe(grid, opts.probe);

  FlowTrace trace;
  FlowState state(grid, spec.action_dim, opts.eta0);
  for (std::size_t i = 0; i < dual0.raw().size(); ++i) state.dual.raw()[i] = dual0.raw()[i];

  ScalarField value = evaluate_policy(spec, grid, control_from_dual(spec.mirror, state.dual), config);
  std::size_t next_snapshot = 0;

  while (state.s < opts.horizon - 1e-12) {
    auto step = flow_step(state, spec, grid, opts.probe, config, &value, opts.max_halvings,
                          opts.horizon - state.s);
    trace.total_halvings += step.halvings;
    state = std::move(step.next);
    value = std::move(step.next_value);

    FlowRecord rec;
    rec.s = state.s;
    rec.eta = state.eta;  // accepted step size
    rec.mono_violation = step.mono_violation;
    double sup_gap = -1e300;
    for (int k = 0; k < grid.levels(); ++k)
      for (int idx = 0; idx < grid.interior_count(); ++idx)
        sup_gap = std::max(sup_gap, value.interior(k, idx) - value_star.interior(k, idx));
    rec.sup_gap = sup_gap;
    rec.probe_gap = value.interior(pn.level, pn.node) - value_star.interior(pn.level, pn.node);
    double grad_sup = 0.0;
    for (int k = 0; k < grid.levels(); ++k)
      for (int idx = 0; idx < grid.interior_count(); ++idx)
        grad_sup = std::max(grad_sup, norm2(step.velocity.node_values(k, idx)));
    rec.grad_sup = grad_sup;
    if (dual_star != nullptr) {
      const ScalarField lyap = lyapunov_field(spec, grid, state.dual, *dual_star, config);
      rec.lyapunov_probe = lyap.interior(pn.level, pn.node);
    }
    trace.records.push_back(rec);

    while (opts.on_snapshot && next_snapshot < opts.snapshot_s.size() &&
           state.s >= opts.snapshot_s[next_snapshot] - 1e-12) {
      opts.on_snapshot(state.s, control_from_dual(spec.mirror, state.dual), value);
      ++next_snapshot;
    }
  }
  return trace;
}

ScalarField lyapunov_field(const ProblemSpec& spec, const Grid& grid, const Field& dual,
                           const Field& dual_star, const SchemeConfig& config) {
  Field source(grid, 1);
  for (int k = 0; k < grid.levels(); ++k)
    for (int idx = 0; idx < grid.interior_count(); ++idx)
      source.at(k, idx) =
          spec.mirror.bregman_dual(dual.node_values(k, idx), dual_star.node_values(k, idx));
  const Field anchor_control = control_from_dual(spec.mirror, dual_star);
  return feynman_kac(spec, grid, anchor_control, source, config);
}

Field value_derivative_residual(const ProblemSpec& spec, const Grid& grid,
                                const FlowState& state, const SchemeConfig& config) {
  const FlowDriver driver = flow_driver(spec, grid, state.dual, config);
  const double h = state.eta / 4.0;

  // Policy values at Z -+ h*G: the flow moves Z by -G, so s+h pairs with -h*G.
  Field dual_fwd(grid, spec.action_dim), dual_bwd(grid, spec.action_dim);
  for (std::size_t i = 0; i < state.dual.raw().size(); ++i) {
    dual_fwd.raw()[i] = state.dual.raw()[i] - h * driver.velocity.raw()[i];
    dual_bwd.raw()[i] = state.dual.raw()[i] + h * driver.velocity.raw()[i];
  }
  const ScalarField v_fwd =
      evaluate_policy(spec, grid, control_from_dual(spec.mirror, dual_fwd), config);
  const ScalarField v_bwd =
      evaluate_policy(spec, grid, control_from_dual(spec.mirror, dual_bwd), config);

  // Quadratic form of the conjugate Hessian along the velocity.
  const auto p = static_cast<std::size_t>(spec.action_dim);
  std::vector<double> hess(p * p);
  Field source(grid, 1);
  for (int k = 0; k < grid.levels(); ++k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      spec.mirror.conjugate_hess(state.dual.node_values(k, idx), hess);
      const auto g = driver.velocity.node_values(k, idx);
      double q = 0.0;
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) q += g[i] * hess[i * p + j] * g[j];
      source.at(k, idx) = q;
    }
  }
  const ScalarField expectation = feynman_kac(spec, grid, driver.control, source, config);

  Field residual(grid, 1);
  for (int k = 0; k < grid.levels(); ++k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      const double lhs = (v_fwd.interior(k, idx) - v_bwd.interior(k, idx)) / (2.0 * h);
      const double rhs = -expectation.interior(k, idx);
      residual.at(k, idx) = lhs - rhs;
    }
  }
  return residual;
}

}  // namespace mdflow
