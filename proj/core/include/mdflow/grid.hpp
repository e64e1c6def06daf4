#pragma once

#include <array>
#include <span>
#include <vector>

namespace mdflow {

/// Tensor-product space-time discretization of a box domain.
///
/// The space axis i carries nx[i] interior nodes; the two endpoints lo[i]
/// and hi[i] are boundary nodes, so dx[i] = (hi[i]-lo[i]) / (nx[i]+1).
/// Time runs over nt+1 levels 0..nt with dt = horizon/nt; level nt is the
/// terminal time. The parabolic boundary is the lateral (spatial) boundary
/// at every level together with the whole closure at the terminal level.
struct GridSpec {
  int dim = 1;  // 1 or 2
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<int, 2> nx{3, 3};  // interior node counts per axis
  int nt = 2;                   // number of time steps
  double horizon = 1.0;         // T

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

class Grid {
 public:
  explicit Grid(GridSpec spec);

  int dim() const { return spec_.dim; }
  int nt() const { return spec_.nt; }
  int levels() const { return spec_.nt + 1; }
  double horizon() const { return spec_.horizon; }
  double lo(int axis) const { return spec_.lo[static_cast<std::size_t>(axis)]; }
  double hi(int axis) const { return spec_.hi[static_cast<std::size_t>(axis)]; }
  int nx(int axis) const { return spec_.nx[static_cast<std::size_t>(axis)]; }
  double dx(int axis) const { return dx_[static_cast<std::size_t>(axis)]; }
  double dt() const { return dt_; }
  const GridSpec& spec() const { return spec_; }

  /// Number of interior nodes per time level.
  int interior_count() const { return n_interior_; }
  /// Number of spatial boundary nodes per time level.
  int boundary_count() const { return static_cast<int>(boundary_pos_.size()); }

  double time_at(int level) const { return dt_ * level; }

  /// Flat interior index from per-axis interior indices (i fastest).
  int interior_index(int i, int j = 0) const { return i + spec_.nx[0] * j; }
  /// Per-axis interior indices from a flat interior index.
  std::array<int, 2> interior_multi(int idx) const {
    if (spec_.dim == 1) return {idx, 0};
    return {idx % spec_.nx[0], idx / spec_.nx[0]};
  }

  /// Coordinate of interior node i along an axis: lo + (i+1)*dx.
  double coord(int axis, int i) const {
    return spec_.lo[static_cast<std::size_t>(axis)] + dx_[static_cast<std::size_t>(axis)] * (i + 1);
  }
  /// Position of an interior node; writes dim() values.
  void node_position(int interior_idx, std::span<double> out) const;
  /// Position of a boundary node slot; writes dim() values.
  void boundary_position(int slot, std::span<double> out) const;

  /// Neighbor of an interior node along an axis (dir = -1 or +1).
  /// Either another interior node or a spatial boundary slot.
  struct Neighbor {
    bool is_boundary = false;
    int index = 0;  // interior index or boundary slot
  };
  Neighbor neighbor(int interior_idx, int axis, int dir) const;

  /// True when x lies strictly inside the open box.
  bool contains(std::span<const double> x) const;
  /// Interior node closest to x (x need not be a node).
  int nearest_interior_node(std::span<const double> x) const;
  /// Time level closest to t, clamped to [0, nt].
  int nearest_time_level(double t) const;

 private:
  GridSpec spec_;
  std::array<double, 2> dx_{0.0, 0.0};
  double dt_ = 0.0;
  int n_interior_ = 0;
  std::vector<std::array<double, 2>> boundary_pos_;
  // Per interior node and axis: neighbor records for dir=-1,+1.
  std::vector<Neighbor> neighbors_;  // layout: ((idx*dim + axis)*2 + (dir>0))

  int boundary_slot_1d(int side) const { return side; }  // 0 = lo, 1 = hi
  void build_boundary_2d();
  std::vector<int> boundary_slot_of_closed_;  // 2D: closed (ci,cj) -> slot or -1
  int closed_index_2d(int ci, int cj) const { return ci + (spec_.nx[0] + 2) * cj; }
};

}  // namespace mdflow
