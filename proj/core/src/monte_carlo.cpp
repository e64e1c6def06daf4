#include "mdflow/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mdflow/rng.hpp"

namespace mdflow {

namespace {

/// Multilinear control lookup, clamped to the interior node hull.
void interpolate_control(const Grid& grid, const Field& control, int level,
                         std::span<const double> x, std::span<double> out) {
  const int d = grid.dim();
  const int p = control.components();
  std::array<int, 2> i0{0, 0};
  std::array<double, 2> w{0.0, 0.0};
  for (int ax = 0; ax < d; ++ax) {
    const auto a = static_cast<std::size_t>(ax);
    double r = (x[a] - grid.lo(ax)) / grid.dx(ax) - 1.0;  // interior node i sits at r = i
    r = std::clamp(r, 0.0, static_cast<double>(grid.nx(ax) - 1));
    int i = static_cast<int>(std::floor(r));
    i = std::min(i, grid.nx(ax) - 2);
    i = std::max(i, 0);
    i0[a] = i;
    w[a] = std::clamp(r - i, 0.0, 1.0);
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (d == 1) {
    const auto left = control.node_values(level, grid.interior_index(i0[0]));
    const auto right = control.node_values(level, grid.interior_index(i0[0] + 1));
    for (int c = 0; c < p; ++c) {
      const auto k = static_cast<std::size_t>(c);
      out[k] = (1.0 - w[0]) * left[k] + w[0] * right[k];
    }
    return;
  }
  for (int bj = 0; bj < 2; ++bj) {
    for (int bi = 0; bi < 2; ++bi) {
      const double wt = (bi ? w[0] : 1.0 - w[0]) * (bj ? w[1] : 1.0 - w[1]);
      if (wt == 0.0) continue;
      const auto vals = control.node_values(level, grid.interior_index(i0[0] + bi, i0[1] + bj));
      for (int c = 0; c < p; ++c) out[static_cast<std::size_t>(c)] += wt * vals[static_cast<std::size_t>(c)];
    }
  }
}

}  // namespace

namespace {

struct PathScratch {
  std::vector<double> x, xn, u, u0, b, diff, noise_scale;
  bool control_constant = false;
};

double simulate_path(const ProblemSpec& spec, const Grid& grid, const Field& control, double t0,
                     std::span<const double> x0, double dt_sim, Rng& rng, PathScratch& s) {
  const int d = spec.state_dim;
  const double horizon = grid.horizon();
  auto& x = s.x;
  auto& xn = s.xn;
  auto& u = s.u;
  std::copy(x0.begin(), x0.end(), x.begin());
  if (s.control_constant) {
    const auto vals = control.node_values(0, 0);
    std::copy(vals.begin(), vals.end(), u.begin());
  }
  if (spec.diffusion_sq_const) {
    for (int ax = 0; ax < d; ++ax) {
      const auto a = static_cast<std::size_t>(ax);
      s.noise_scale[a] = std::sqrt((*spec.diffusion_sq_const)[a] * dt_sim);
    }
  }
  double t = t0;
  double cost = 0.0;
  while (true) {
    if (t >= horizon - 1e-12) {
      cost += spec.terminal_cost(x);
      break;
    }
    const double h = std::min(dt_sim, horizon - t);
    const bool full_step = h == dt_sim;
    if (!s.control_constant) {
      const int level = std::min(static_cast<int>(t / grid.dt()), grid.nt() - 1);
      interpolate_control(grid, control, level, x, u);
    }

    double f = spec.running_cost(t, x, u);
    if (spec.tau > 0.0) {
      spec.reference_control(t, x, s.u0);
      f += spec.tau * spec.mirror.bregman(u, s.u0);
    }

    spec.drift(t, x, u, s.b);
    if (!spec.diffusion_sq_const || !full_step) {
      if (spec.diffusion_sq_const)
        s.diff = *spec.diffusion_sq_const;
      else
        spec.diffusion_sq(t, x, s.diff);
      for (int ax = 0; ax < d; ++ax) {
        const auto a = static_cast<std::size_t>(ax);
        s.noise_scale[a] = std::sqrt(s.diff[a] * h);
      }
    }
    for (int ax = 0; ax < d; ++ax) {
      const auto a = static_cast<std::size_t>(ax);
      xn[a] = x[a] + s.b[a] * h + s.noise_scale[a] * rng.normal();
    }

    // First face crossing along the segment x -> xn, if any.
    double lambda = 2.0;
    int hit_axis = -1;
    double hit_value = 0.0;
    for (int ax = 0; ax < d; ++ax) {
      const auto a = static_cast<std::size_t>(ax);
      for (const double bound : {grid.lo(ax), grid.hi(ax)}) {
        const double dxn = xn[a] - x[a];
        if (dxn == 0.0) continue;
        const double lam = (bound - x[a]) / dxn;
        if (lam > 0.0 && lam <= 1.0 && lam < lambda) {
          const bool outward = (bound == grid.lo(ax)) ? xn[a] <= bound : xn[a] >= bound;
          if (outward) {
            lambda = lam;
            hit_axis = ax;
            hit_value = bound;
          }
        }
      }
    }

    if (hit_axis >= 0) {
      cost += f * lambda * h;
      for (int ax = 0; ax < d; ++ax) {
        const auto a = static_cast<std::size_t>(ax);
        x[a] += lambda * (xn[a] - x[a]);
      }
      x[static_cast<std::size_t>(hit_axis)] = hit_value;  // land exactly on the face
      cost += spec.terminal_cost(x);
      break;
    }

    cost += f * h;
    std::copy(xn.begin(), xn.end(), x.begin());
    t += h;
  }
  return cost;
}

}  // namespace

McEstimate monte_carlo_value(const ProblemSpec& spec, const Grid& grid, const Field& control,
                             double t0, std::span<const double> x0, int n_paths, double dt_sim,
                             std::uint64_t seed) {
  if (n_paths < 100) throw std::invalid_argument("monte_carlo_value: need at least 100 paths");
  if (!(dt_sim > 0.0)) throw std::invalid_argument("monte_carlo_value: dt_sim must be positive");
  if (!grid.contains(x0)) throw std::invalid_argument("monte_carlo_value: start point not interior");
  const int d = spec.state_dim;
  const int p = spec.action_dim;

  // Paths split into fixed blocks; block partials combine in block order, so
  // the result is bit-identical for any worker count. Path i still draws from
  // seed ^ splitmix64(i).
  const int n_blocks = std::min(64, n_paths);
  std::vector<double> block_sum(static_cast<std::size_t>(n_blocks), 0.0);
  std::vector<double> block_sumsq(static_cast<std::size_t>(n_blocks), 0.0);

  bool control_constant = true;
  {
    const auto first = control.node_values(0, 0);
    for (int k = 0; k < grid.levels() && control_constant; ++k)
      for (int idx = 0; idx < grid.interior_count() && control_constant; ++idx) {
        const auto vals = control.node_values(k, idx);
        for (int c = 0; c < p; ++c)
          if (vals[static_cast<std::size_t>(c)] != first[static_cast<std::size_t>(c)]) {
            control_constant = false;
            break;
          }
      }
  }

  const auto run_block = [&](int block) {
    PathScratch s;
    s.x.resize(static_cast<std::size_t>(d));
    s.xn.resize(static_cast<std::size_t>(d));
    s.u.resize(static_cast<std::size_t>(p));
    s.u0.resize(static_cast<std::size_t>(p));
    s.b.resize(static_cast<std::size_t>(d));
    s.diff.resize(static_cast<std::size_t>(d));
    s.noise_scale.resize(static_cast<std::size_t>(d));
    s.control_constant = control_constant;
    const int begin = static_cast<int>(static_cast<long long>(n_paths) * block / n_blocks);
    const int end = static_cast<int>(static_cast<long long>(n_paths) * (block + 1) / n_blocks);
    double sum = 0.0, sumsq = 0.0;
    for (int path = begin; path < end; ++path) {
      Rng rng(seed ^ splitmix64(static_cast<std::uint64_t>(path)));
      const double cost = simulate_path(spec, grid, control, t0, x0, dt_sim, rng, s);
      sum += cost;
      sumsq += cost * cost;
    }
    block_sum[static_cast<std::size_t>(block)] = sum;
    block_sumsq[static_cast<std::size_t>(block)] = sumsq;
  };

  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(n_blocks)));
  if (workers <= 1) {
    for (int block = 0; block < n_blocks; ++block) run_block(block);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int block = static_cast<int>(w); block < n_blocks; block += static_cast<int>(workers))
          run_block(block);
      });
    }
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sumsq = 0.0;
  for (int block = 0; block < n_blocks; ++block) {
    sum += block_sum[static_cast<std::size_t>(block)];
    sumsq += block_sumsq[static_cast<std::size_t>(block)];
  }
  McEstimate est;
  est.paths = n_paths;
  est.mean = sum / n_paths;
  const double var = std::max(0.0, sumsq / n_paths - est.mean * est.mean);
  est.std_error = std::sqrt(var / n_paths);
  return est;
}

}  // namespace mdflow
