#pragma once

#include <span>

namespace mdflow {

/// Mirror geometry for a bounded convex action set: the barrier psi, its
/// Legendre conjugate, their gradients, the conjugate Hessian and both
/// Bregman divergences.
///
/// Two geometries are provided behind one interface:
///  - Ball(R, p):   A = closed ball of radius R in R^p,
///                  psi(a) = -log(R^2 - |a|^2);
///  - Simplex(p):   A = probability simplex over p actions,
///                  psi(a) = sum_i a_i log a_i (negative entropy).
///
/// The conjugate gradient maps all of R^p onto the interior of A, which is
/// what lets gradient steps run unconstrained in the dual space.
class MirrorMap {
 public:
  enum class Kind { Ball, Simplex };

  static MirrorMap ball(double radius, int dim);
  static MirrorMap simplex(int actions);

  Kind kind() const { return kind_; }
  /// Dual/action dimension p.
  int dim() const { return dim_; }
  /// Ball radius; throws for the simplex.
  double radius() const;

  /// Barrier value; +infinity outside dom(psi). On the simplex boundary
  /// the convention 0*log 0 = 0 applies, so psi stays finite there.
  double potential(std::span<const double> a) const;

  /// Gradient of the barrier. Requires a strictly interior point; for the
  /// simplex the convention of keeping the +1 term is used, i.e.
  /// grad_i = 1 + log a_i (softmax absorbs constant shifts anyway).
  void potential_grad(std::span<const double> a, std::span<double> out) const;

  /// Legendre conjugate psi*(y). Finite for every y; the ball evaluation
  /// uses a singularity-free algebraic form and the simplex uses
  /// max-shifted log-sum-exp, both stable for |y| up to ~1e3.
  double conjugate(std::span<const double> y) const;

  /// Mirror map: grad psi*(y), a strictly interior point of A.
  void conjugate_grad(std::span<const double> y, std::span<double> out) const;

  /// Hessian of psi* (row-major p*p, symmetric positive semidefinite;
  /// positive definite for the ball, rows summing to zero for the simplex).
  void conjugate_hess(std::span<const double> y, std::span<double> out) const;

  /// Bregman divergence D_psi(a | anchor). `a` may touch the boundary of
  /// dom(psi) (then the value may be +infinity for the ball); `anchor`
  /// must be strictly interior or a domain error is thrown.
  double bregman(std::span<const double> a, std::span<const double> anchor) const;

  /// Dual Bregman divergence D_psi*(y, anchor) =
  /// psi*(y) - psi*(anchor) - grad psi*(anchor) . (y - anchor).
  double bregman_dual(std::span<const double> y, std::span<const double> anchor) const;

  /// True when a is in the interior of A with the given margin
  /// (Euclidean distance for the ball, componentwise for the simplex).
  bool strictly_interior(std::span<const double> a, double margin = 0.0) const;
  /// True when a lies in the closed action set (small tolerance).
  bool in_closure(std::span<const double> a, double tol = 1e-9) const;

  /// Pulls a point within distance eps of the boundary back into the
  /// interior: radial shrink for the ball, mixing with the uniform
  /// distribution for the simplex. Returns the Euclidean distance moved.
  double clamp_to_interior(std::span<double> a, double eps) const;

 private:
  MirrorMap(Kind k, int dim, double radius) : kind_(k), dim_(dim), radius_(radius) {}
  Kind kind_;
  int dim_;
  double radius_;
};

}  // namespace mdflow
