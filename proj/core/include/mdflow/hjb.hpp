#pragma once

#include "mdflow/parabolic.hpp"

namespace mdflow {

struct HjbResult {
  ScalarField value;   // optimal value function
  Field control;       // pointwise minimizer field
  double max_residual = 0.0;  // worst discrete Bellman residual
  int worst_level = 0;
  int worst_node = 0;
  int max_rounds_used = 0;  // policy-iteration rounds at the hardest level
};

/// Ground-truth solve of the dynamic-programming equation by a backward
/// sweep with policy iteration per time level: extract the spatial gradient
/// of the current iterate, minimize the Hamiltonian pointwise, take one
/// implicit linear step with the frozen minimizer, repeat until the level
/// stops changing. Convergence is certified a posteriori by the residual of
/// the scheme's own discrete equation at the converged minimizer.
HjbResult solve_hjb(const ProblemSpec& spec, const Grid& grid, const SchemeConfig& config = {},
                    double policy_tol = 1e-9, int max_rounds = 100);

struct DualFromControlResult {
  Field dual;  // grad psi of the (clamped) control, per node
  bool clamped = false;
  double clamp_magnitude = 0.0;  // largest Euclidean displacement applied
};

/// Dual representation of a control field: points within `clamp_eps` of the
/// action-set boundary are pulled inside first (the barrier gradient blows
/// up there), and the largest displacement is reported so downstream rate
/// certificates can flag the surrogate.
DualFromControlResult dual_from_control(const MirrorMap& mirror, const Field& control,
                                        double clamp_eps = 1e-6);

}  // namespace mdflow
