#include "mdflow/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdflow {

namespace {

/// Central gradient of one time level of a value field.
void level_gradient(const Grid& grid, const ScalarField& v, int level, Field& grad) {
  for (int idx = 0; idx < grid.interior_count(); ++idx) {
    for (int ax = 0; ax < grid.dim(); ++ax) {
      const double vp = v.neighbor_value(level, grid.neighbor(idx, ax, +1));
      const double vm = v.neighbor_value(level, grid.neighbor(idx, ax, -1));
      grad.at(level, idx, ax) = (vp - vm) / (2.0 * grid.dx(ax));
    }
  }
}

/// Minimize the Hamiltonian nodewise on one level; fills control/drift/source.
void extract_minimizers(const ProblemSpec& spec, const Grid& grid, const Field& grad, int level,
                        Field& control, Field& drift, Field& source) {
  const double t = grid.time_at(level);
  std::vector<double> x(static_cast<std::size_t>(spec.state_dim));
  std::vector<double> b(static_cast<std::size_t>(spec.state_dim));
  std::vector<double> u0(static_cast<std::size_t>(spec.action_dim));
  for (int idx = 0; idx < grid.interior_count(); ++idx) {
    grid.node_position(idx, x);
    const auto res = min_hamiltonian(spec, t, x, grad.node_values(level, idx));
    auto dst = control.node_values(level, idx);
    std::copy(res.argmin.begin(), res.argmin.end(), dst.begin());
    spec.drift(t, x, res.argmin, b);
    for (int ax = 0; ax < spec.state_dim; ++ax) drift.at(level, idx, ax) = b[static_cast<std::size_t>(ax)];
    double f = spec.running_cost(t, x, res.argmin);
    if (spec.tau > 0.0) {
      spec.reference_control(t, x, u0);
      f += spec.tau * spec.mirror.bregman(res.argmin, u0);
    }
    source.at(level, idx) = f;
  }
}

/// One implicit backward step on a single level with frozen coefficients.
/// Mirrors the scheme in solve_linear_parabolic; kept level-local so the
/// policy iteration can reuse it.
void implicit_level_step(const ProblemSpec& spec, const Grid& grid, const Field& drift,
                         const Field& source, int level, ScalarField& v,
                         const SchemeConfig& config) {
  const int n = grid.interior_count();
  const int d = grid.dim();
  const double dt = grid.dt();
  std::vector<double> x(static_cast<std::size_t>(d)), diff(static_cast<std::size_t>(d));
  std::vector<double> diag(static_cast<std::size_t>(n), 1.0);
  std::vector<double> coef(static_cast<std::size_t>(n) * d * 2, 0.0);
  const double t = grid.time_at(level);
  for (int idx = 0; idx < n; ++idx) {
    grid.node_position(idx, x);
    spec.diffusion_sq(t, x, diff);
    for (int ax = 0; ax < d; ++ax) {
      const double dx = grid.dx(ax);
      const double dcoef = 0.5 * diff[static_cast<std::size_t>(ax)] / (dx * dx);
      const double b = drift.at(level, idx, ax);
      const double cm = dt * (dcoef + std::max(-b, 0.0) / dx);
      const double cp = dt * (dcoef + std::max(b, 0.0) / dx);
      coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + 0] = cm;
      coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + 1] = cp;
      diag[static_cast<std::size_t>(idx)] += cm + cp;
    }
  }
  int sweep = 0;
  for (; sweep < config.max_iters; ++sweep) {
    double max_change = 0.0;
    for (int idx = 0; idx < n; ++idx) {
      double acc = v.interior(level + 1, idx) + dt * source.at(level, idx);
      for (int ax = 0; ax < d; ++ax)
        for (int dir = 0; dir < 2; ++dir)
          acc += coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + dir] *
                 v.neighbor_value(level, grid.neighbor(idx, ax, dir == 0 ? -1 : +1));
      const double next = acc / diag[static_cast<std::size_t>(idx)];
      max_change = std::max(max_change, std::abs(next - v.interior(level, idx)));
      v.interior(level, idx) = next;
    }
    if (max_change <= config.tol) break;
  }
  if (sweep >= config.max_iters)
    throw std::runtime_error("solve_hjb: Gauss-Seidel did not converge at level " +
                             std::to_string(level));
}

/// Residual of the scheme's discrete equation at the frozen minimizer:
/// (V_{k+1}-V_k)/dt + diffusion + upwind drift + running cost.
double level_residual(const ProblemSpec& spec, const Grid& grid, const Field& drift,
                      const Field& source, const ScalarField& v, int level, int& worst_node) {
  const int d = grid.dim();
  const double dt = grid.dt();
  std::vector<double> x(static_cast<std::size_t>(d)), diff(static_cast<std::size_t>(d));
  double worst = 0.0;
  worst_node = 0;
  const double t = grid.time_at(level);
  for (int idx = 0; idx < grid.interior_count(); ++idx) {
    grid.node_position(idx, x);
    spec.diffusion_sq(t, x, diff);
    const double vc = v.interior(level, idx);
    double r = (v.interior(level + 1, idx) - vc) / dt + source.at(level, idx);
    for (int ax = 0; ax < d; ++ax) {
      const double dx = grid.dx(ax);
      const double vp = v.neighbor_value(level, grid.neighbor(idx, ax, +1));
      const double vm = v.neighbor_value(level, grid.neighbor(idx, ax, -1));
      r += 0.5 * diff[static_cast<std::size_t>(ax)] * (vp - 2.0 * vc + vm) / (dx * dx);
      const double b = drift.at(level, idx, ax);
      r += std::max(b, 0.0) * (vp - vc) / dx - std::max(-b, 0.0) * (vc - vm) / dx;
    }
    if (std::abs(r) > worst) {
      worst = std::abs(r);
      worst_node = idx;
    }
  }
  return worst;
}

}  // namespace

HjbResult solve_hjb(const ProblemSpec& spec, const Grid& grid, const SchemeConfig& config,
                    double policy_tol, int max_rounds) {
  spec.validate_on(grid);
  HjbResult res{ScalarField(grid), Field(grid, spec.action_dim)};
  Field drift(grid, spec.state_dim);
  Field source(grid, 1);
  Field grad(grid, spec.state_dim);

  // Parabolic boundary data.
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (int slot = 0; slot < grid.boundary_count(); ++slot) {
    grid.boundary_position(slot, x);
    const double g = spec.terminal_cost(x);
    for (int k = 0; k < grid.levels(); ++k) res.value.boundary(k, slot) = g;
  }
  for (int idx = 0; idx < grid.interior_count(); ++idx) {
    grid.node_position(idx, x);
    res.value.interior(grid.nt(), idx) = spec.terminal_cost(x);
  }

  // Terminal-level minimizer (uses the gradient of the terminal data).
  level_gradient(grid, res.value, grid.nt(), grad);
  extract_minimizers(spec, grid, grad, grid.nt(), res.control, drift, source);

  std::vector<double> prev(static_cast<std::size_t>(grid.interior_count()));
  for (int k = grid.nt() - 1; k >= 0; --k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx)
      res.value.interior(k, idx) = res.value.interior(k + 1, idx);
    int round = 0;
    for (; round < max_rounds; ++round) {
      for (int idx = 0; idx < grid.interior_count(); ++idx) prev[static_cast<std::size_t>(idx)] = res.value.interior(k, idx);
      level_gradient(grid, res.value, k, grad);
      extract_minimizers(spec, grid, grad, k, res.control, drift, source);
      implicit_level_step(spec, grid, drift, source, k, res.value, config);
      double change = 0.0;
      for (int idx = 0; idx < grid.interior_count(); ++idx)
        change = std::max(change, std::abs(res.value.interior(k, idx) - prev[static_cast<std::size_t>(idx)]));
      if (change <= policy_tol) break;
    }
    if (round >= max_rounds) {
      int worst = 0;
      double worst_change = 0.0;
      for (int idx = 0; idx < grid.interior_count(); ++idx) {
        const double c = std::abs(res.value.interior(k, idx) - prev[static_cast<std::size_t>(idx)]);
        if (c > worst_change) {
          worst_change = c;
          worst = idx;
        }
      }
      throw std::runtime_error("solve_hjb: policy iteration did not converge at level " +
                               std::to_string(k) + ", worst node " + std::to_string(worst) +
                               ", change " + std::to_string(worst_change));
    }
    res.max_rounds_used = std::max(res.max_rounds_used, round + 1);

    // Refresh the minimizer from the converged level, then certify.
    level_gradient(grid, res.value, k, grad);
    extract_minimizers(spec, grid, grad, k, res.control, drift, source);
    int worst_node = 0;
    const double r = level_residual(spec, grid, drift, source, res.value, k, worst_node);
    if (r > res.max_residual) {
      res.max_residual = r;
      res.worst_level = k;
      res.worst_node = worst_node;
    }
  }
  res.value.require_finite("solve_hjb value");
  res.control.require_finite("solve_hjb control");
  return res;
}

DualFromControlResult dual_from_control(const MirrorMap& mirror, const Field& control,
                                        double clamp_eps) {
  const Grid& grid = control.grid();
  const int p = control.components();
  DualFromControlResult res{Field(grid, p)};
  std::vector<double> a(static_cast<std::size_t>(p));
  std::vector<double> g(static_cast<std::size_t>(p));
  for (int k = 0; k < grid.levels(); ++k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      const auto vals = control.node_values(k, idx);
      std::copy(vals.begin(), vals.end(), a.begin());
      const double moved = mirror.clamp_to_interior(a, clamp_eps);
      if (moved > 0.0) {
        res.clamped = true;
        res.clamp_magnitude = std::max(res.clamp_magnitude, moved);
      }
      mirror.potential_grad(a, g);
      auto dst = res.dual.node_values(k, idx);
      std::copy(g.begin(), g.end(), dst.begin());
    }
  }
  res.dual.require_finite("dual_from_control");
  return res;
}

}  // namespace mdflow
