#pragma once

#include <functional>

#include "mdflow/field.hpp"
#include "mdflow/problem.hpp"

namespace mdflow {

/// Time-stepping configuration for the linear parabolic solves.
struct SchemeConfig {
  enum class Mode { Implicit, Explicit };
  Mode mode = Mode::Implicit;
  double tol = 1e-10;       // Gauss-Seidel sup-change tolerance
  int max_iters = 10000;    // Gauss-Seidel sweep budget per time level
  double cfl_safety = 0.9;  // explicit mode: dt <= safety*dx^2/(d*max diffusion)
};

/// Backward solve of  dv/dt + (1/2) tr(sigma sigma^T D^2 v) + b . Dv + F = 0
/// with Dirichlet data `boundary_data` on the parabolic boundary (lateral
/// at every level, whole closure at the terminal level).
///
/// The diffusion term uses second-order central differences and the drift
/// term first-order upwind differences, picked per component by the sign of
/// the drift, so the implicit system is a strictly diagonally dominant
/// M-matrix and the discrete maximum principle holds exactly. Implicit
/// steps are solved by Gauss-Seidel sweeps to `tol`.
///
/// `drift` carries b evaluated per node (state_dim components); `source`
/// carries F per node (1 component).
ScalarField solve_linear_parabolic(
    const ProblemSpec& spec, const Grid& grid, const Field& drift, const Field& source,
    const std::function<double(std::span<const double>)>& boundary_data,
    const SchemeConfig& config = {});

/// Drift b(t,x,u(t,x)) of a control field, per node.
Field policy_drift(const ProblemSpec& spec, const Grid& grid, const Field& control);
/// Running cost f(t,x,u) + tau * D_psi(u | u0) of a control field, per node.
Field policy_source(const ProblemSpec& spec, const Grid& grid, const Field& control);

/// Value function of a fixed Markov control: solves the on-policy Bellman
/// equation with source f^u + tau rho^u and boundary/terminal data g.
/// Requires the control to be admissible (finite barrier when tau > 0,
/// closure membership when tau = 0) at every node.
ScalarField evaluate_policy(const ProblemSpec& spec, const Grid& grid, const Field& control,
                            const SchemeConfig& config = {});

/// Expected path integral of a source under the `control` dynamics killed
/// at the parabolic boundary: solves the same equation with zero boundary
/// data. The probabilistic reading is E integral_t^{T_exit} F dr.
ScalarField feynman_kac(const ProblemSpec& spec, const Grid& grid, const Field& control,
                        const Field& source, const SchemeConfig& config = {});

/// Smallest row excess (diagonal minus the absolute off-diagonal row sum)
/// of the implicit system matrix at one time level. Strictly positive for
/// the upwind scheme; exposed so tests can assert the M-matrix property.
double implicit_row_excess(const ProblemSpec& spec, const Grid& grid, const Field& drift,
                           int level);

}  // namespace mdflow
