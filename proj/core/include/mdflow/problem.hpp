#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdflow/grid.hpp"
#include "mdflow/linalg.hpp"
#include "mdflow/mirror_map.hpp"

namespace mdflow {

/// Linear-quadratic instance on a ball action set:
///   drift b(t,x,a) = m1 x + n a,  diffusion sigma = m2 (constant),
///   running cost f = |x|^2/2 + |a|^2/2,  terminal cost g = x' m3 x.
/// The scalar case state_dim = action_dim = 1 uses the same formulas.
struct LQBallInstance {
  int state_dim = 1;
  int action_dim = 1;
  int noise_dim = 1;
  Mat m1;  // state_dim x state_dim
  Mat n;   // state_dim x action_dim
  Mat m2;  // state_dim x noise_dim, diagonal (no cross-diffusion)
  Mat m3;  // state_dim x state_dim
  double radius = 1.0;
  double tau = 0.0;
};

/// Relaxed control over finitely many actions: per-action drift and cost,
/// entropy regularization against a reference distribution on actions.
struct FiniteActionInstance {
  int state_dim = 1;
  int actions = 2;
  /// drift of action i at (t,x); writes state_dim values
  std::function<void(double t, std::span<const double> x, int action, std::span<double> out)> drift;
  /// running cost of action i at (t,x)
  std::function<double(double t, std::span<const double> x, int action)> cost;
  std::vector<double> reference;  // a0, strictly positive, sums to one
  double tau = 0.5;               // must be > 0
};

/// Full problem data: coefficients, regularization, reference control and
/// action geometry. Coefficient callbacks follow the restriction that the
/// diffusion has no cross terms, so only diag(sigma sigma^T) is carried.
struct ProblemSpec {
  enum class MinimizerKind { LqBall, FiniteAction, Generic };

  int state_dim = 1;
  int action_dim = 1;
  MirrorMap mirror = MirrorMap::ball(1.0, 1);
  double tau = 0.0;
  double ellipticity = 0.0;  // required lower bound on diag(sigma sigma^T)

  std::function<void(double t, std::span<const double> x, std::span<const double> a, std::span<double> out)>
      drift;  // writes state_dim values
  std::function<void(double t, std::span<const double> x, std::span<double> out)>
      diffusion_sq;  // diag(sigma sigma^T), state_dim values
  std::function<double(double t, std::span<const double> x, std::span<const double> a)> running_cost;
  std::function<double(std::span<const double> x)> terminal_cost;
  std::function<void(double t, std::span<const double> x, std::span<double> out)>
      reference_control;  // u0, strictly interior

  MinimizerKind minimizer = MinimizerKind::Generic;
  std::optional<LQBallInstance> lq;
  std::optional<FiniteActionInstance> finite;

  /// Set when diag(sigma sigma^T) does not depend on (t, x); lets the
  /// solvers and the Monte Carlo oracle hoist the coefficient lookup.
  std::optional<std::vector<double>> diffusion_sq_const;

  /// Checks ellipticity and interiority of the reference control on every
  /// grid node (all levels). Throws std::runtime_error on violation.
  void validate_on(const Grid& grid) const;
};

ProblemSpec make_lq_ball_problem(const LQBallInstance& inst);
ProblemSpec make_finite_action_problem(const FiniteActionInstance& inst);

/// Pre-minimization Hamiltonian H(t,x,z,a) = b.z + f + tau * D_psi(a|u0).
/// For tau = 0 the Bregman term is skipped entirely, so boundary actions
/// are admissible.
double hamiltonian(const ProblemSpec& spec, double t, std::span<const double> x,
                   std::span<const double> z, std::span<const double> a);

/// Action gradient of H: grad_a(b.z + f) + tau*(grad psi(a) - grad psi(u0)).
/// Closed forms for the two instances; central finite differences of b and f
/// for generic specs.
void hamiltonian_grad_action(const ProblemSpec& spec, double t, std::span<const double> x,
                             std::span<const double> z, std::span<const double> a,
                             std::span<double> out);

struct MinHamiltonianResult {
  double value = 0.0;
  std::vector<double> argmin;
  bool exact = true;  // false when the generic projected-gradient path ran
};

/// Minimized Hamiltonian and its argmin over the action set.
MinHamiltonianResult min_hamiltonian(const ProblemSpec& spec, double t,
                                     std::span<const double> x, std::span<const double> z);

/// Root of the cubic
///   P(e) = e^3 + (m - 3R) e^2 + (2R^2 - 2 tau - 2 R m) e + 2 R tau
/// in (0, R), where m >= 0 is the dual gain |N^T z|. The bracket signs
/// P(0) = 2 R tau > 0 and P(R) = -m R^2 < 0 guarantee a unique root, found
/// by safeguarded Newton with bisection fallback. Returns R when m = 0.
/// The optimal ball action then has magnitude R - e.
double epsilon_root(double radius, double tau, double gain);

}  // namespace mdflow
