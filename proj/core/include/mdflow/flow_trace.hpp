#pragma once

#include <vector>

namespace mdflow {

/// One accepted mirror-flow step. `s` is the optimization time after the
/// step; gaps are measured against the ground-truth value function.
struct FlowRecord {
  double s = 0.0;
  double sup_gap = 0.0;         // sup over nodes of V^{u_s} - V*
  double probe_gap = 0.0;       // gap at the designated probe node
  double lyapunov_probe = 0.0;  // Lyapunov value at the probe (0 when no dual anchor)
  double grad_sup = 0.0;        // sup-norm of the dual velocity
  double eta = 0.0;             // accepted step size
  double mono_violation = 0.0;  // max(0, probe value increase) for this step
};

struct FlowTrace {
  std::vector<FlowRecord> records;
  int total_halvings = 0;       // backtracking events over the whole run
  int backtrack_failures = 0;   // steps that exhausted the halving budget
};

}  // namespace mdflow
