#include "mdflow/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_mat(const Mat& m, int rows, int cols, const char* name) {
  if (m.rows != rows || m.cols != cols)
    throw std::invalid_argument(std::string("LQBallInstance: matrix ") + name + " has wrong shape");
}

/// Euclidean projection onto the probability simplex (sort-based).
void project_simplex(std::span<double> a) {
  std::vector<double> u(a.begin(), a.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = t;
    }
  }
  (void)rho;
  for (double& ai : a) ai = std::max(ai - theta, 0.0);
}
}  // namespace

void ProblemSpec::validate_on(const Grid& grid) const {
  std::vector<double> x(static_cast<std::size_t>(state_dim));
  std::vector<double> diff(static_cast<std::size_t>(state_dim));
  std::vector<double> u0(static_cast<std::size_t>(action_dim));
  for (int k = 0; k < grid.levels(); ++k) {
    const double t = grid.time_at(k);
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      grid.node_position(idx, x);
      diffusion_sq(t, x, diff);
      for (int ax = 0; ax < state_dim; ++ax)
        if (diff[static_cast<std::size_t>(ax)] < ellipticity - 1e-12)
          throw std::runtime_error("ProblemSpec: diffusion below the ellipticity bound at a grid node");
      reference_control(t, x, u0);
      if (!mirror.strictly_interior(u0) || !std::isfinite(mirror.potential(u0)))
        throw std::runtime_error("ProblemSpec: reference control not strictly interior at a grid node");
    }
  }
}

ProblemSpec make_lq_ball_problem(const LQBallInstance& inst) {
  const int d = inst.state_dim, p = inst.action_dim, dn = inst.noise_dim;
  check_mat(inst.m1, d, d, "m1");
  check_mat(inst.n, d, p, "n");
  check_mat(inst.m2, d, dn, "m2");
  check_mat(inst.m3, d, d, "m3");
  if (!(inst.radius > 0.0)) throw std::invalid_argument("LQBallInstance: radius must be positive");
  if (inst.tau < 0.0) throw std::invalid_argument("LQBallInstance: tau must be >= 0");

  // sigma sigma^T with no cross terms: off-diagonal rows must be orthogonal.
  double min_diag = kInf;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < dn; ++k) acc += inst.m2(i, k) * inst.m2(j, k);
      if (i == j) {
        min_diag = std::min(min_diag, acc);
      } else if (std::abs(acc) > 1e-14) {
        throw std::invalid_argument("LQBallInstance: sigma sigma^T must be diagonal");
      }
    }
  }
  if (!(min_diag > 0.0))
    throw std::invalid_argument("LQBallInstance: m2 must make sigma sigma^T strictly positive definite");

  ProblemSpec spec;
  spec.state_dim = d;
  spec.action_dim = p;
  spec.mirror = MirrorMap::ball(inst.radius, p);
  spec.tau = inst.tau;
  spec.ellipticity = min_diag;
  spec.minimizer = ProblemSpec::MinimizerKind::LqBall;
  spec.lq = inst;

  const Mat m1 = inst.m1, n = inst.n, m2 = inst.m2, m3 = inst.m3;
  spec.drift = [m1, n, d](double, std::span<const double> x, std::span<const double> a,
                          std::span<double> out) {
    std::vector<double> tmp(static_cast<std::size_t>(d));
    m1.apply(x, out);
    n.apply(a, tmp);
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] += tmp[static_cast<std::size_t>(i)];
  };
  std::vector<double> diff_diag(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int k = 0; k < dn; ++k) acc += m2(i, k) * m2(i, k);
    diff_diag[static_cast<std::size_t>(i)] = acc;
  }
  spec.diffusion_sq_const = diff_diag;
  spec.diffusion_sq = [diff_diag](double, std::span<const double>, std::span<double> out) {
    std::copy(diff_diag.begin(), diff_diag.end(), out.begin());
  };
  spec.running_cost = [](double, std::span<const double> x, std::span<const double> a) {
    return 0.5 * dot(x, x) + 0.5 * dot(a, a);
  };
  spec.terminal_cost = [m3, d](std::span<const double> x) {
    std::vector<double> tmp(static_cast<std::size_t>(d));
    m3.apply(x, tmp);
    return dot(x, tmp);
  };
  spec.reference_control = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  return spec;
}

ProblemSpec make_finite_action_problem(const FiniteActionInstance& inst) {
  const int d = inst.state_dim, p = inst.actions;
  if (p < 2) throw std::invalid_argument("FiniteActionInstance: need at least 2 actions");
  if (!(inst.tau > 0.0)) throw std::invalid_argument("FiniteActionInstance: tau must be > 0");
  if (static_cast<int>(inst.reference.size()) != p)
    throw std::invalid_argument("FiniteActionInstance: reference size mismatch");
  double sum = 0.0;
  for (double ai : inst.reference) {
    if (!(ai > 0.0)) throw std::invalid_argument("FiniteActionInstance: reference must be strictly positive");
    sum += ai;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("FiniteActionInstance: reference must sum to one");
  if (!inst.drift || !inst.cost)
    throw std::invalid_argument("FiniteActionInstance: drift and cost callbacks are required");

  ProblemSpec spec;
  spec.state_dim = d;
  spec.action_dim = p;
  spec.mirror = MirrorMap::simplex(p);
  spec.tau = inst.tau;
  spec.minimizer = ProblemSpec::MinimizerKind::FiniteAction;
  spec.finite = inst;

  const auto beta = inst.drift;
  const auto phi = inst.cost;
  const auto a0 = inst.reference;
  spec.drift = [beta, d, p](double t, std::span<const double> x, std::span<const double> a,
                            std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> bi(static_cast<std::size_t>(d));
    for (int i = 0; i < p; ++i) {
      beta(t, x, i, bi);
      for (int ax = 0; ax < d; ++ax)
        out[static_cast<std::size_t>(ax)] += a[static_cast<std::size_t>(i)] * bi[static_cast<std::size_t>(ax)];
    }
  };
  spec.running_cost = [phi, p](double t, std::span<const double> x, std::span<const double> a) {
    double acc = 0.0;
    for (int i = 0; i < p; ++i) acc += a[static_cast<std::size_t>(i)] * phi(t, x, i);
    return acc;
  };
  spec.reference_control = [a0](double, std::span<const double>, std::span<double> out) {
    std::copy(a0.begin(), a0.end(), out.begin());
  };
  // diffusion_sq, terminal_cost and ellipticity are environment data the
  // caller still has to provide (they are not part of the action model).
  return spec;
}

double hamiltonian(const ProblemSpec& spec, double t, std::span<const double> x,
                   std::span<const double> z, std::span<const double> a) {
  std::vector<double> b(static_cast<std::size_t>(spec.state_dim));
  spec.drift(t, x, a, b);
  double val = dot(b, z) + spec.running_cost(t, x, a);
  if (spec.tau > 0.0) {
    std::vector<double> u0(static_cast<std::size_t>(spec.action_dim));
    spec.reference_control(t, x, u0);
    val += spec.tau * spec.mirror.bregman(a, u0);
  }
  return val;
}

void hamiltonian_grad_action(const ProblemSpec& spec, double t, std::span<const double> x,
                             std::span<const double> z, std::span<const double> a,
                             std::span<double> out) {
  const int p = spec.action_dim;
  if (spec.minimizer == ProblemSpec::MinimizerKind::LqBall) {
    spec.lq->n.apply_transpose(z, out);
    for (int i = 0; i < p; ++i) out[static_cast<std::size_t>(i)] += a[static_cast<std::size_t>(i)];
  } else if (spec.minimizer == ProblemSpec::MinimizerKind::FiniteAction) {
    const auto& fa = *spec.finite;
    std::vector<double> bi(static_cast<std::size_t>(spec.state_dim));
    for (int i = 0; i < p; ++i) {
      fa.drift(t, x, i, bi);
      out[static_cast<std::size_t>(i)] = dot(bi, z) + fa.cost(t, x, i);
    }
  } else {
    // Central differences of b.z + f in the action.
    const double h = 1e-6;
    std::vector<double> ap(a.begin(), a.end()), am(a.begin(), a.end());
    std::vector<double> b(static_cast<std::size_t>(spec.state_dim));
    for (int i = 0; i < p; ++i) {
      const auto k = static_cast<std::size_t>(i);
      ap[k] = a[k] + h;
      am[k] = a[k] - h;
      spec.drift(t, x, ap, b);
      const double fp = dot(b, z) + spec.running_cost(t, x, ap);
      spec.drift(t, x, am, b);
      const double fm = dot(b, z) + spec.running_cost(t, x, am);
      out[k] = (fp - fm) / (2.0 * h);
      ap[k] = a[k];
      am[k] = a[k];
    }
  }
  if (spec.tau > 0.0) {
    // Exact gradient of the Bregman penalty: tau*(grad psi(a) - grad psi(u0)).
    std::vector<double> u0(static_cast<std::size_t>(p)), ga(static_cast<std::size_t>(p)),
        g0(static_cast<std::size_t>(p));
    spec.reference_control(t, x, u0);
    spec.mirror.potential_grad(a, ga);
    spec.mirror.potential_grad(u0, g0);
    for (int i = 0; i < p; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out[k] += spec.tau * (ga[k] - g0[k]);
    }
  }
}

namespace {

MinHamiltonianResult min_hamiltonian_lq(const ProblemSpec& spec, std::span<const double> x,
                                        std::span<const double> z) {
  const auto& lq = *spec.lq;
  const int d = spec.state_dim, p = spec.action_dim;
  const double radius = lq.radius;
  std::vector<double> ntz(static_cast<std::size_t>(p));
  lq.n.apply_transpose(z, ntz);
  const double m = norm2(ntz);

  MinHamiltonianResult res;
  res.argmin.assign(static_cast<std::size_t>(p), 0.0);

  double action_part = 0.0;
  if (spec.tau == 0.0) {
    if (m <= radius) {
      for (int i = 0; i < p; ++i) res.argmin[static_cast<std::size_t>(i)] = -ntz[static_cast<std::size_t>(i)];
      action_part = -0.5 * m * m;
    } else {
      for (int i = 0; i < p; ++i)
        res.argmin[static_cast<std::size_t>(i)] = -radius * ntz[static_cast<std::size_t>(i)] / m;
      action_part = -radius * m + 0.5 * radius * radius;
    }
  } else if (m < 1e-14) {
    action_part = 0.0;  // argmin 0, Bregman against u0 = 0 vanishes
  } else {
    const double eps = epsilon_root(radius, spec.tau, m);
    const double r = radius - eps;
    for (int i = 0; i < p; ++i)
      res.argmin[static_cast<std::size_t>(i)] = -r * ntz[static_cast<std::size_t>(i)] / m;
    action_part = -r * m + 0.5 * r * r +
                  spec.tau * std::log(radius * radius / (radius * radius - r * r));
  }

  std::vector<double> m1x(static_cast<std::size_t>(d));
  lq.m1.apply(x, m1x);
  res.value = dot(m1x, z) + 0.5 * dot(x, x) + action_part;
  res.exact = true;
  return res;
}

MinHamiltonianResult min_hamiltonian_finite(const ProblemSpec& spec, double t,
                                            std::span<const double> x, std::span<const double> z) {
  const auto& fa = *spec.finite;
  const int p = spec.action_dim;
  // argmin_i proportional to a0_i exp(-(beta_i.z + phi_i)/tau);
  // minimized value is -tau log sum_i a0_i exp(-(beta_i.z + phi_i)/tau).
  std::vector<double> q(static_cast<std::size_t>(p));
  std::vector<double> bi(static_cast<std::size_t>(spec.state_dim));
  for (int i = 0; i < p; ++i) {
    fa.drift(t, x, i, bi);
    q[static_cast<std::size_t>(i)] = std::log(fa.reference[static_cast<std::size_t>(i)]) -
                                     (dot(bi, z) + fa.cost(t, x, i)) / spec.tau;
  }
  double mx = -kInf;
  for (double qi : q) mx = std::max(mx, qi);
  double acc = 0.0;
  MinHamiltonianResult res;
  res.argmin.assign(static_cast<std::size_t>(p), 0.0);
  for (int i = 0; i < p; ++i) {
    const double e = std::exp(q[static_cast<std::size_t>(i)] - mx);
    res.argmin[static_cast<std::size_t>(i)] = e;
    acc += e;
  }
  for (int i = 0; i < p; ++i) res.argmin[static_cast<std::size_t>(i)] /= acc;
  res.value = -spec.tau * (mx + std::log(acc));
  res.exact = true;
  return res;
}

MinHamiltonianResult min_hamiltonian_generic(const ProblemSpec& spec, double t,
                                             std::span<const double> x, std::span<const double> z) {
  const int p = spec.action_dim;
  MinHamiltonianResult res;
  res.exact = false;
  res.argmin.assign(static_cast<std::size_t>(p), 0.0);
  spec.reference_control(t, x, res.argmin);

  const auto project = [&](std::span<double> a) {
    if (spec.mirror.kind() == MirrorMap::Kind::Ball) {
      const double r = norm2(a);
      const double rmax = spec.mirror.radius() * (spec.tau > 0.0 ? 1.0 - 1e-9 : 1.0);
      if (r > rmax)
        for (double& ai : a) ai *= rmax / r;
    } else {
      project_simplex(a);
      if (spec.tau > 0.0) {
        // keep the barrier finite
        double sum = 0.0;
        for (double& ai : a) {
          ai = std::max(ai, 1e-12);
          sum += ai;
        }
        for (double& ai : a) ai /= sum;
      }
    }
  };

  double fval = hamiltonian(spec, t, x, z, res.argmin);
  std::vector<double> grad(static_cast<std::size_t>(p)), cand(static_cast<std::size_t>(p));
  const int max_iters = 200;
  const double tol = 1e-10;
  for (int it = 0; it < max_iters; ++it) {
    hamiltonian_grad_action(spec, t, x, z, res.argmin, grad);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (int i = 0; i < p; ++i) {
        const auto k = static_cast<std::size_t>(i);
        cand[k] = res.argmin[k] - step * grad[k];
      }
      project(cand);
      const double fc = hamiltonian(spec, t, x, z, cand);
      if (fc < fval - 1e-12) {
        double delta = 0.0;
        for (int i = 0; i < p; ++i) {
          const auto k = static_cast<std::size_t>(i);
          delta = std::max(delta, std::abs(cand[k] - res.argmin[k]));
        }
        res.argmin = cand;
        fval = fc;
        moved = true;
        if (delta < tol) it = max_iters;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  res.value = fval;
  return res;
}

}  // namespace

MinHamiltonianResult min_hamiltonian(const ProblemSpec& spec, double t, std::span<const double> x,
                                     std::span<const double> z) {
  for (double zi : z)
    if (!std::isfinite(zi)) throw std::domain_error("min_hamiltonian: non-finite gradient input");
  switch (spec.minimizer) {
    case ProblemSpec::MinimizerKind::LqBall:
      return min_hamiltonian_lq(spec, x, z);
    case ProblemSpec::MinimizerKind::FiniteAction:
      return min_hamiltonian_finite(spec, t, x, z);
    case ProblemSpec::MinimizerKind::Generic:
      return min_hamiltonian_generic(spec, t, x, z);
  }
  throw std::logic_error("min_hamiltonian: unknown minimizer kind");
}

double epsilon_root(double radius, double tau, double gain) {
  if (!(radius > 0.0)) throw std::invalid_argument("epsilon_root: radius must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("epsilon_root: tau must be positive");
  if (gain < 0.0) throw std::invalid_argument("epsilon_root: gain must be >= 0");
  if (gain == 0.0) return radius;

  const double c2 = gain - 3.0 * radius;
  const double c1 = 2.0 * radius * radius - 2.0 * tau - 2.0 * radius * gain;
  const double c0 = 2.0 * radius * tau;
  const auto poly = [&](double e) { return ((e + c2) * e + c1) * e + c0; };
  const auto dpoly = [&](double e) { return (3.0 * e + 2.0 * c2) * e + c1; };
  const double scale = c0 + radius * radius * radius + std::abs(c2) * radius * radius +
                       std::abs(c1) * radius;

  // Bracket [lo, hi] with P(lo) > 0 > P(hi).
  double lo = 0.0, hi = radius;
  double e = 0.5 * radius;
  for (int it = 0; it < 200; ++it) {
    const double pe = poly(e);
    if (std::abs(pe) <= 1e-13 * scale) break;
    if (pe > 0.0)
      lo = e;
    else
      hi = e;
    const double dp = dpoly(e);
    double next = dp != 0.0 ? e - pe / dp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == e) break;
    e = next;
  }
  return e;
}

}  // namespace mdflow
