#include "mdflow/mirror_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdflow/linalg.hpp"

namespace mdflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }
}  // namespace

MirrorMap MirrorMap::ball(double radius, int dim) {
  if (!(radius > 0.0)) throw std::invalid_argument("MirrorMap::ball: radius must be positive");
  if (dim < 1) throw std::invalid_argument("MirrorMap::ball: dim must be >= 1");
  return MirrorMap(Kind::Ball, dim, radius);
}

MirrorMap MirrorMap::simplex(int actions) {
  if (actions < 2) throw std::invalid_argument("MirrorMap::simplex: need at least 2 actions");
  return MirrorMap(Kind::Simplex, actions, 0.0);
}

double MirrorMap::radius() const {
  if (kind_ != Kind::Ball) throw std::logic_error("MirrorMap::radius: not a ball map");
  return radius_;
}

double MirrorMap::potential(std::span<const double> a) const {
  if (kind_ == Kind::Ball) {
    const double r2 = radius_ * radius_ - dot(a, a);
    return r2 > 0.0 ? -std::log(r2) : kInf;
  }
  double sum = 0.0, val = 0.0;
  for (double ai : a) {
    if (ai < 0.0) return kInf;
    sum += ai;
    val += xlogx(ai);
  }
  if (std::abs(sum - 1.0) > 1e-9) return kInf;
  return val;
}

void MirrorMap::potential_grad(std::span<const double> a, std::span<double> out) const {
  if (kind_ == Kind::Ball) {
    const double r2 = radius_ * radius_ - dot(a, a);
    if (!(r2 > 0.0)) throw std::domain_error("potential_grad: point not strictly inside the ball");
    for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] = 2.0 * a[static_cast<std::size_t>(i)] / r2;
    return;
  }
  for (int i = 0; i < dim_; ++i) {
    const double ai = a[static_cast<std::size_t>(i)];
    if (!(ai > 0.0)) throw std::domain_error("potential_grad: simplex point has a non-positive component");
    out[static_cast<std::size_t>(i)] = 1.0 + std::log(ai);
  }
}

double MirrorMap::conjugate(std::span<const double> y) const {
  if (kind_ == Kind::Ball) {
    // psi*(y) = sqrt(1+R^2|y|^2) - 1 + log(2R^2) - log(1+sqrt(1+R^2|y|^2)),
    // the 0/0-free rewriting of the closed form (exact at y = 0).
    const double r2 = radius_ * radius_;
    const double s = std::sqrt(1.0 + r2 * dot(y, y));
    return s - 1.0 + std::log(2.0 * r2) - std::log1p(s);
  }
  double m = -kInf;
  for (double yi : y) m = std::max(m, yi);
  double acc = 0.0;
  for (double yi : y) acc += std::exp(yi - m);
  return m + std::log(acc);
}

void MirrorMap::conjugate_grad(std::span<const double> y, std::span<double> out) const {
  if (kind_ == Kind::Ball) {
    const double r2 = radius_ * radius_;
    const double s = std::sqrt(1.0 + r2 * dot(y, y));
    const double c = r2 / (1.0 + s);
    for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] = c * y[static_cast<std::size_t>(i)];
    return;
  }
  double m = -kInf;
  for (double yi : y) m = std::max(m, yi);
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double e = std::exp(y[static_cast<std::size_t>(i)] - m);
    out[static_cast<std::size_t>(i)] = e;
    acc += e;
  }
  for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] /= acc;
}

void MirrorMap::conjugate_hess(std::span<const double> y, std::span<double> out) const {
  const auto p = static_cast<std::size_t>(dim_);
  if (kind_ == Kind::Ball) {
    const double r2 = radius_ * radius_;
    const double s = std::sqrt(1.0 + r2 * dot(y, y));
    const double alpha = r2 / (1.0 + s);
    const double beta = r2 * r2 / (s * (1.0 + s) * (1.0 + s));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        out[i * p + j] = (i == j ? alpha : 0.0) - beta * y[i] * y[j];
    return;
  }
  std::vector<double> sm(p);
  conjugate_grad(y, sm);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      out[i * p + j] = (i == j ? sm[i] : 0.0) - sm[i] * sm[j];
}

double MirrorMap::bregman(std::span<const double> a, std::span<const double> anchor) const {
  if (kind_ == Kind::Ball) {
    const double r2 = radius_ * radius_;
    const double da = r2 - dot(a, a);
    const double db = r2 - dot(anchor, anchor);
    if (!(db > 0.0)) throw std::domain_error("bregman: anchor on or outside the ball boundary");
    if (da < 0.0) return kInf;
    if (da == 0.0) return kInf;  // psi(a) = +inf on the sphere
    double cross = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const auto k = static_cast<std::size_t>(i);
      cross += anchor[k] * (a[k] - anchor[k]);
    }
    return std::log(db / da) - 2.0 * cross / db;
  }
  // Exact Bregman of the negative entropy with the 0*log0 = 0 convention;
  // reduces to KL(a|anchor) when both points sum to one.
  double val = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double ai = a[k], bi = anchor[k];
    if (!(bi > 0.0)) throw std::domain_error("bregman: anchor has a zero simplex component");
    if (ai < 0.0) return kInf;
    val += xlogx(ai) - xlogx(bi) - (1.0 + std::log(bi)) * (ai - bi);
  }
  return val;
}

double MirrorMap::bregman_dual(std::span<const double> y, std::span<const double> anchor) const {
  std::vector<double> g(static_cast<std::size_t>(dim_));
  conjugate_grad(anchor, g);
  double cross = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const auto k = static_cast<std::size_t>(i);
    cross += g[k] * (y[k] - anchor[k]);
  }
  return conjugate(y) - conjugate(anchor) - cross;
}

bool MirrorMap::strictly_interior(std::span<const double> a, double margin) const {
  if (kind_ == Kind::Ball) return norm2(a) < radius_ - margin;
  double sum = 0.0;
  for (double ai : a) {
    if (!(ai > margin)) return false;
    sum += ai;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

bool MirrorMap::in_closure(std::span<const double> a, double tol) const {
  if (kind_ == Kind::Ball) return norm2(a) <= radius_ + tol;
  double sum = 0.0;
  for (double ai : a) {
    if (ai < -tol) return false;
    sum += ai;
  }
  return std::abs(sum - 1.0) <= std::max(tol, 1e-9);
}

double MirrorMap::clamp_to_interior(std::span<double> a, double eps) const {
  if (eps <= 0.0) return 0.0;
  if (kind_ == Kind::Ball) {
    const double r = norm2(a);
    if (r <= radius_ - eps) return 0.0;
    const double scale = (radius_ - eps) / r;
    for (double& ai : a) ai *= scale;
    return r * (1.0 - scale);
  }
  double mn = kInf;
  for (double ai : a) mn = std::min(mn, ai);
  if (mn >= eps) return 0.0;
  const double unif = 1.0 / dim_;
  double moved2 = 0.0;
  for (double& ai : a) {
    const double ni = (1.0 - eps) * ai + eps * unif;
    moved2 += (ni - ai) * (ni - ai);
    ai = ni;
  }
  return std::sqrt(moved2);
}

}  // namespace mdflow
