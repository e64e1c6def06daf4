#pragma once

#include <cstdint>

#include "mdflow/field.hpp"
#include "mdflow/problem.hpp"

namespace mdflow {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int paths = 0;
};

/// Monte Carlo estimate of the control objective from (t, x): Euler-Maruyama
/// paths with per-step exit detection against the box, terminal/exit cost g
/// at the stopping point (projected onto the boundary along the last step),
/// running cost by left-endpoint quadrature. Exit detection is discrete in
/// time, so the estimate carries an O(sqrt(dt_sim)) boundary bias; this is a
/// cross-validation oracle, not a production pricer.
///
/// Controls are interpolated multilinearly in space (clamped to the interior
/// node hull, which keeps values inside the convex action set) and held
/// piecewise constant in time. Path i draws from seed ^ splitmix64(i).
McEstimate monte_carlo_value(const ProblemSpec& spec, const Grid& grid, const Field& control,
                             double t, std::span<const double> x, int n_paths, double dt_sim,
                             std::uint64_t seed);

}  // namespace mdflow
