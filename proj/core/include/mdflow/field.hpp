#pragma once

#include <span>
#include <vector>

#include "mdflow/grid.hpp"

namespace mdflow {

/// Values attached to the interior nodes of a grid, one block of
/// `components` doubles per (time level, node). Controls, dual variables
/// and gradients live here; they are never needed on the boundary.
class Field {
 public:
  Field(const Grid& grid, int components, double init = 0.0);

  const Grid& grid() const { return *grid_; }
  int components() const { return comps_; }
  int levels() const { return grid_->levels(); }

  double at(int level, int node, int comp = 0) const {
    return data_[offset(level, node) + static_cast<std::size_t>(comp)];
  }
  double& at(int level, int node, int comp = 0) {
    return data_[offset(level, node) + static_cast<std::size_t>(comp)];
  }
  std::span<const double> node_values(int level, int node) const {
    return {data_.data() + offset(level, node), static_cast<std::size_t>(comps_)};
  }
  std::span<double> node_values(int level, int node) {
    return {data_.data() + offset(level, node), static_cast<std::size_t>(comps_)};
  }

  std::span<const double> raw() const { return data_; }
  std::span<double> raw() { return data_; }

  void fill(double v);
  bool all_finite() const;
  /// Throws std::runtime_error when any entry is NaN or infinite.
  void require_finite(const char* what) const;

 private:
  std::size_t offset(int level, int node) const {
    return (static_cast<std::size_t>(level) * grid_->interior_count() + node) * comps_;
  }
  const Grid* grid_;
  int comps_;
  std::vector<double> data_;
};

/// Scalar field with explicit storage on the spatial boundary, as needed
/// by value functions carrying Dirichlet data.
class ScalarField {
 public:
  explicit ScalarField(const Grid& grid, double init = 0.0);

  const Grid& grid() const { return *grid_; }

  double interior(int level, int node) const {
    return interior_[static_cast<std::size_t>(level) * grid_->interior_count() + node];
  }
  double& interior(int level, int node) {
    return interior_[static_cast<std::size_t>(level) * grid_->interior_count() + node];
  }
  double boundary(int level, int slot) const {
    return boundary_[static_cast<std::size_t>(level) * grid_->boundary_count() + slot];
  }
  double& boundary(int level, int slot) {
    return boundary_[static_cast<std::size_t>(level) * grid_->boundary_count() + slot];
  }

  /// Value at a stencil neighbor, reading boundary storage when needed.
  double neighbor_value(int level, const Grid::Neighbor& nb) const {
    return nb.is_boundary ? boundary(level, nb.index) : interior(level, nb.index);
  }

  bool all_finite() const;
  void require_finite(const char* what) const;

  std::span<const double> interior_raw() const { return interior_; }
  std::span<double> interior_raw() { return interior_; }

 private:
  const Grid* grid_;
  std::vector<double> interior_;
  std::vector<double> boundary_;
};

/// Central-difference spatial gradient of a value field. Exact on affine
/// functions; next to the boundary the stencil uses the stored Dirichlet
/// value, which preserves the O(dx^2) error. Returns a dim()-component field.
Field spatial_gradient(const ScalarField& v);

}  // namespace mdflow
