#include "mdflow/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdflow {

void GridSpec::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("GridSpec.dim: must be 1 or 2");
  for (int ax = 0; ax < dim; ++ax) {
    const auto a = static_cast<std::size_t>(ax);
    if (!std::isfinite(lo[a]) || !std::isfinite(hi[a]))
      throw std::invalid_argument("GridSpec.lo/hi: bounds must be finite (axis " + std::to_string(ax) + ")");
    if (!(hi[a] > lo[a]))
      throw std::invalid_argument("GridSpec.lo/hi: hi must exceed lo (axis " + std::to_string(ax) + ")");
    if (nx[a] < 3)
      throw std::invalid_argument("GridSpec.nx: need at least 3 interior nodes (axis " + std::to_string(ax) + ")");
  }
  if (nt < 2) throw std::invalid_argument("GridSpec.nt: need at least 2 time steps");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("GridSpec.horizon: must be positive and finite");
}

Grid::Grid(GridSpec spec) : spec_(spec) {
  spec_.validate();
  n_interior_ = 1;
  for (int ax = 0; ax < spec_.dim; ++ax) {
    const auto a = static_cast<std::size_t>(ax);
    dx_[a] = (spec_.hi[a] - spec_.lo[a]) / (spec_.nx[a] + 1);
    n_interior_ *= spec_.nx[a];
  }
  dt_ = spec_.horizon / spec_.nt;

  if (spec_.dim == 1) {
    boundary_pos_.push_back({spec_.lo[0], 0.0});
    boundary_pos_.push_back({spec_.hi[0], 0.0});
  } else {
    build_boundary_2d();
  }

  // Precompute neighbor records.
  neighbors_.resize(static_cast<std::size_t>(n_interior_) * spec_.dim * 2);
  for (int idx = 0; idx < n_interior_; ++idx) {
    const auto mi = interior_multi(idx);
    for (int ax = 0; ax < spec_.dim; ++ax) {
      for (int d = 0; d < 2; ++d) {
        const int dir = d == 0 ? -1 : +1;
        const int ni = mi[static_cast<std::size_t>(ax)] + dir;
        Neighbor nb;
        if (ni < 0 || ni >= spec_.nx[static_cast<std::size_t>(ax)]) {
          nb.is_boundary = true;
          if (spec_.dim == 1) {
            nb.index = boundary_slot_1d(dir > 0 ? 1 : 0);
          } else {
            // Closed indices: interior i maps to ci = i+1.
            int ci = mi[0] + 1, cj = mi[1] + 1;
            if (ax == 0)
              ci = dir > 0 ? spec_.nx[0] + 1 : 0;
            else
              cj = dir > 0 ? spec_.nx[1] + 1 : 0;
            nb.index = boundary_slot_of_closed_[static_cast<std::size_t>(closed_index_2d(ci, cj))];
          }
        } else {
          nb.is_boundary = false;
          auto nmi = mi;
          nmi[static_cast<std::size_t>(ax)] = ni;
          nb.index = interior_index(nmi[0], nmi[1]);
        }
        neighbors_[(static_cast<std::size_t>(idx) * spec_.dim + ax) * 2 + d] = nb;
      }
    }
  }
}

void Grid::build_boundary_2d() {
  const int cx = spec_.nx[0] + 2;
  const int cy = spec_.nx[1] + 2;
  boundary_slot_of_closed_.assign(static_cast<std::size_t>(cx) * cy, -1);
  for (int cj = 0; cj < cy; ++cj) {
    for (int ci = 0; ci < cx; ++ci) {
      const bool on_boundary = ci == 0 || ci == cx - 1 || cj == 0 || cj == cy - 1;
      if (!on_boundary) continue;
      boundary_slot_of_closed_[static_cast<std::size_t>(closed_index_2d(ci, cj))] =
          static_cast<int>(boundary_pos_.size());
      boundary_pos_.push_back({spec_.lo[0] + dx_[0] * ci, spec_.lo[1] + dx_[1] * cj});
    }
  }
}

void Grid::node_position(int interior_idx, std::span<double> out) const {
  const auto mi = interior_multi(interior_idx);
  for (int ax = 0; ax < spec_.dim; ++ax)
    out[static_cast<std::size_t>(ax)] = coord(ax, mi[static_cast<std::size_t>(ax)]);
}

void Grid::boundary_position(int slot, std::span<double> out) const {
  const auto& p = boundary_pos_[static_cast<std::size_t>(slot)];
  for (int ax = 0; ax < spec_.dim; ++ax) out[static_cast<std::size_t>(ax)] = p[static_cast<std::size_t>(ax)];
}

Grid::Neighbor Grid::neighbor(int interior_idx, int axis, int dir) const {
  return neighbors_[(static_cast<std::size_t>(interior_idx) * spec_.dim + axis) * 2 + (dir > 0 ? 1 : 0)];
}

bool Grid::contains(std::span<const double> x) const {
  for (int ax = 0; ax < spec_.dim; ++ax) {
    const auto a = static_cast<std::size_t>(ax);
    if (!(x[a] > spec_.lo[a] && x[a] < spec_.hi[a])) return false;
  }
  return true;
}

int Grid::nearest_interior_node(std::span<const double> x) const {
  std::array<int, 2> mi{0, 0};
  for (int ax = 0; ax < spec_.dim; ++ax) {
    const auto a = static_cast<std::size_t>(ax);
    const double rel = (x[a] - spec_.lo[a]) / dx_[a] - 1.0;
    int i = static_cast<int>(std::lround(rel));
    if (i < 0) i = 0;
    if (i >= spec_.nx[a]) i = spec_.nx[a] - 1;
    mi[a] = i;
  }
  return interior_index(mi[0], mi[1]);
}

int Grid::nearest_time_level(double t) const {
  int k = static_cast<int>(std::lround(t / dt_));
  if (k < 0) k = 0;
  if (k > spec_.nt) k = spec_.nt;
  return k;
}

}  // namespace mdflow
