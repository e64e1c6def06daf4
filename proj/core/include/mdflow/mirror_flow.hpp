#pragma once

#include <array>
#include <functional>
#include <vector>

#include "mdflow/flow_trace.hpp"
#include "mdflow/parabolic.hpp"

namespace mdflow {

/// Space-time point at which monotonicity and rate certificates are read
/// off; snapped to the nearest grid node/level on use.
struct ProbePoint {
  double t = 0.0;
  std::array<double, 2> x{0.0, 0.0};
};

struct FlowState {
  double s = 0.0;  // optimization time
  Field dual;      // Z, action_dim components per node
  double eta;      // current step size

  FlowState(const Grid& grid, int components, double eta0)
      : dual(grid, components), eta(eta0) {}
};

/// Control field u = grad psi*(Z), nodewise.
Field control_from_dual(const MirrorMap& mirror, const Field& dual);

/// Flow driver G = grad_a H(., grad V^u, u) at the given dual state.
/// Also returns the policy value so callers can reuse the solve.
struct FlowDriver {
  Field control;
  ScalarField value;
  Field velocity;  // G; the dual moves by -eta*G
};
FlowDriver flow_driver(const ProblemSpec& spec, const Grid& grid, const Field& dual,
                       const SchemeConfig& config = {},
                       const ScalarField* value_hint = nullptr);

struct FlowStepResult {
  FlowState next;
  ScalarField value;       // value of the pre-step control
  ScalarField next_value;  // value of the accepted post-step control
  Field velocity;          // driver used for the step
  int halvings = 0;
  double mono_violation = 0.0;  // max(0, probe increase) at acceptance
};

/// One explicit Euler step in optimization time with monotone backtracking:
/// if the probe-point value rises by more than 1e-8 + 10*eta^2 the step size
/// is halved and the step retried (at most `max_halvings` times, then a
/// std::runtime_error reports the offending state). `eta_cap` shortens the
/// step, e.g. to land exactly on the flow horizon.
FlowStepResult flow_step(const FlowState& state, const ProblemSpec& spec, const Grid& grid,
                         const ProbePoint& probe, const SchemeConfig& config = {},
                         const ScalarField* value_hint = nullptr, int max_halvings = 20,
                         double eta_cap = 1e300);

struct FlowOptions {
  double horizon = 20.0;  // flow time S
  double eta0 = 0.1;
  ProbePoint probe;
  int max_halvings = 20;
  std::vector<double> snapshot_s;  // sorted flow times at which to emit snapshots
  std::function<void(double s, const Field& control, const ScalarField& value)> on_snapshot;
};

/// Integrates the flow until s >= S, recording one trace row per accepted
/// step (gaps against `value_star`; Lyapunov values when `dual_star` is
/// given, else zero in that column).
FlowTrace run_flow(const Field& dual0, const FlowOptions& opts, const ProblemSpec& spec,
                   const Grid& grid, const ScalarField& value_star, const Field* dual_star,
                   const SchemeConfig& config = {});

/// Lyapunov field: expected path integral, under the `dual_star` control
/// dynamics, of the pointwise dual Bregman gap between Z and Z*.
/// Nonnegative up to solver tolerance by the discrete maximum principle.
ScalarField lyapunov_field(const ProblemSpec& spec, const Grid& grid, const Field& dual,
                           const Field& dual_star, const SchemeConfig& config = {});

/// Residual of the flow's value-derivative identity: the s-derivative of
/// the policy value (central difference with step eta/4, reusing the flow's
/// own velocity) minus the expected path integral of -G' Hess psi*(Z) G.
Field value_derivative_residual(const ProblemSpec& spec, const Grid& grid,
                                const FlowState& state, const SchemeConfig& config = {});

}  // namespace mdflow
