#include "mdflow/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdflow {

namespace {

/// Stencil coefficients of one time level: for each node, the diagonal
/// excess over 1 and the neighbor weights (already multiplied by dt).
struct LevelStencil {
  std::vector<double> diag;  // 1 + dt*sum(coef)
  std::vector<double> coef;  // node*(2*dim) layout, order (axis, dir-)(axis, dir+)
};

LevelStencil build_stencil(const ProblemSpec& spec, const Grid& grid, const Field& drift,
                           int level) {
  const int n = grid.interior_count();
  const int d = grid.dim();
  const double dt = grid.dt();
  LevelStencil st;
  st.diag.assign(static_cast<std::size_t>(n), 1.0);
  st.coef.assign(static_cast<std::size_t>(n) * d * 2, 0.0);
  std::vector<double> x(static_cast<std::size_t>(d)), diff(static_cast<std::size_t>(d));
  const double t = grid.time_at(level);
  for (int idx = 0; idx < n; ++idx) {
    grid.node_position(idx, x);
    spec.diffusion_sq(t, x, diff);
    for (int ax = 0; ax < d; ++ax) {
      const double dx = grid.dx(ax);
      const double dcoef = 0.5 * diff[static_cast<std::size_t>(ax)] / (dx * dx);
      const double b = drift.at(level, idx, ax);
      const double bp = std::max(b, 0.0), bm = std::max(-b, 0.0);
      const double cm = dt * (dcoef + bm / dx);  // weight of the dir=-1 neighbor
      const double cp = dt * (dcoef + bp / dx);  // weight of the dir=+1 neighbor
      st.coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + 0] = cm;
      st.coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + 1] = cp;
      st.diag[static_cast<std::size_t>(idx)] += cm + cp;
    }
  }
  return st;
}

void fill_parabolic_boundary(const Grid& grid, ScalarField& v,
                             const std::function<double(std::span<const double>)>& boundary_data) {
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (int slot = 0; slot < grid.boundary_count(); ++slot) {
    grid.boundary_position(slot, x);
    const double g = boundary_data(x);
    for (int k = 0; k < grid.levels(); ++k) v.boundary(k, slot) = g;
  }
  for (int idx = 0; idx < grid.interior_count(); ++idx) {
    grid.node_position(idx, x);
    v.interior(grid.nt(), idx) = boundary_data(x);
  }
}

}  // namespace

double implicit_row_excess(const ProblemSpec& spec, const Grid& grid, const Field& drift,
                           int level) {
  const auto st = build_stencil(spec, grid, drift, level);
  const int d = grid.dim();
  double excess = st.diag[0];
  for (int idx = 0; idx < grid.interior_count(); ++idx) {
    double row = st.diag[static_cast<std::size_t>(idx)];
    for (int ax = 0; ax < d; ++ax) {
      for (int dir = 0; dir < 2; ++dir) {
        // Off-diagonal entries only exist for interior neighbors; boundary
        // weights multiply known data and move to the right-hand side.
        if (!grid.neighbor(idx, ax, dir == 0 ? -1 : +1).is_boundary)
          row -= st.coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + dir];
      }
    }
    excess = std::min(excess, row);
  }
  return excess;
}

ScalarField solve_linear_parabolic(
    const ProblemSpec& spec, const Grid& grid, const Field& drift, const Field& source,
    const std::function<double(std::span<const double>)>& boundary_data,
    const SchemeConfig& config) {
  drift.require_finite("solve_linear_parabolic drift");
  source.require_finite("solve_linear_parabolic source");
  const int n = grid.interior_count();
  const int d = grid.dim();
  const double dt = grid.dt();

  ScalarField v(grid);
  fill_parabolic_boundary(grid, v, boundary_data);

  if (config.mode == SchemeConfig::Mode::Explicit) {
    // Guard: dt <= safety * dx^2 / (d * max diffusion).
    double max_diff = 0.0;
    std::vector<double> x(static_cast<std::size_t>(d)), diff(static_cast<std::size_t>(d));
    for (int k = 0; k < grid.levels(); ++k) {
      for (int idx = 0; idx < n; ++idx) {
        grid.node_position(idx, x);
        spec.diffusion_sq(grid.time_at(k), x, diff);
        for (int ax = 0; ax < d; ++ax) max_diff = std::max(max_diff, diff[static_cast<std::size_t>(ax)]);
      }
    }
    double min_dx2 = grid.dx(0) * grid.dx(0);
    if (d == 2) min_dx2 = std::min(min_dx2, grid.dx(1) * grid.dx(1));
    const double dt_max = config.cfl_safety * min_dx2 / (d * max_diff);
    if (dt > dt_max)
      throw std::runtime_error("explicit scheme CFL violation: dt = " + std::to_string(dt) +
                               " exceeds " + std::to_string(dt_max));
  }

  for (int k = grid.nt() - 1; k >= 0; --k) {
    if (config.mode == SchemeConfig::Mode::Explicit) {
      const auto st = build_stencil(spec, grid, drift, k + 1);
      for (int idx = 0; idx < n; ++idx) {
        double acc = (2.0 - st.diag[static_cast<std::size_t>(idx)]) * v.interior(k + 1, idx) +
                     dt * source.at(k + 1, idx);
        for (int ax = 0; ax < d; ++ax) {
          for (int dir = 0; dir < 2; ++dir) {
            const auto nb = grid.neighbor(idx, ax, dir == 0 ? -1 : +1);
            acc += st.coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + dir] *
                   v.neighbor_value(k + 1, nb);
          }
        }
        v.interior(k, idx) = acc;
      }
      continue;
    }

    // Implicit step: Gauss-Seidel sweeps on the M-matrix system.
    const auto st = build_stencil(spec, grid, drift, k);
    for (int idx = 0; idx < n; ++idx) v.interior(k, idx) = v.interior(k + 1, idx);  // warm start
    int sweep = 0;
    for (; sweep < config.max_iters; ++sweep) {
      double max_change = 0.0;
      for (int idx = 0; idx < n; ++idx) {
        double acc = v.interior(k + 1, idx) + dt * source.at(k, idx);
        for (int ax = 0; ax < d; ++ax) {
          for (int dir = 0; dir < 2; ++dir) {
            const auto nb = grid.neighbor(idx, ax, dir == 0 ? -1 : +1);
            acc += st.coef[(static_cast<std::size_t>(idx) * d + ax) * 2 + dir] *
                   v.neighbor_value(k, nb);
          }
        }
        const double next = acc / st.diag[static_cast<std::size_t>(idx)];
        max_change = std::max(max_change, std::abs(next - v.interior(k, idx)));
        v.interior(k, idx) = next;
      }
      if (max_change <= config.tol) break;
    }
    if (sweep >= config.max_iters)
      throw std::runtime_error("implicit solve: Gauss-Seidel did not reach tolerance at level " +
                               std::to_string(k));
  }
  v.require_finite("solve_linear_parabolic output");
  return v;
}

Field policy_drift(const ProblemSpec& spec, const Grid& grid, const Field& control) {
  Field drift(grid, spec.state_dim);
  std::vector<double> x(static_cast<std::size_t>(spec.state_dim));
  std::vector<double> b(static_cast<std::size_t>(spec.state_dim));
  for (int k = 0; k < grid.levels(); ++k) {
    const double t = grid.time_at(k);
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      grid.node_position(idx, x);
      spec.drift(t, x, control.node_values(k, idx), b);
      for (int ax = 0; ax < spec.state_dim; ++ax) drift.at(k, idx, ax) = b[static_cast<std::size_t>(ax)];
    }
  }
  return drift;
}

Field policy_source(const ProblemSpec& spec, const Grid& grid, const Field& control) {
  Field src(grid, 1);
  std::vector<double> x(static_cast<std::size_t>(spec.state_dim));
  std::vector<double> u0(static_cast<std::size_t>(spec.action_dim));
  for (int k = 0; k < grid.levels(); ++k) {
    const double t = grid.time_at(k);
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      grid.node_position(idx, x);
      const auto a = control.node_values(k, idx);
      double val = spec.running_cost(t, x, a);
      if (spec.tau > 0.0) {
        spec.reference_control(t, x, u0);
        val += spec.tau * spec.mirror.bregman(a, u0);
      }
      src.at(k, idx) = val;
    }
  }
  return src;
}

namespace {
void require_admissible(const ProblemSpec& spec, const Grid& grid, const Field& control) {
  if (control.components() != spec.action_dim)
    throw std::invalid_argument("control field has wrong component count");
  for (int k = 0; k < grid.levels(); ++k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      const auto a = control.node_values(k, idx);
      if (!spec.mirror.in_closure(a))
        throw std::domain_error("control leaves the action set at a grid node");
      if (spec.tau > 0.0 && !std::isfinite(spec.mirror.potential(a)))
        throw std::domain_error("control with infinite barrier under tau > 0 at a grid node");
    }
  }
}
}  // namespace

ScalarField evaluate_policy(const ProblemSpec& spec, const Grid& grid, const Field& control,
                            const SchemeConfig& config) {
  require_admissible(spec, grid, control);
  const Field drift = policy_drift(spec, grid, control);
  const Field src = policy_source(spec, grid, control);
  return solve_linear_parabolic(spec, grid, drift, src, spec.terminal_cost, config);
}

ScalarField feynman_kac(const ProblemSpec& spec, const Grid& grid, const Field& control,
                        const Field& source, const SchemeConfig& config) {
  require_admissible(spec, grid, control);
  const Field drift = policy_drift(spec, grid, control);
  return solve_linear_parabolic(spec, grid, drift, source,
                                [](std::span<const double>) { return 0.0; }, config);
}

}  // namespace mdflow
