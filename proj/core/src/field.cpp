#include "mdflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mdflow {

Field::Field(const Grid& grid, int components, double init)
    : grid_(&grid), comps_(components) {
  if (components < 1) throw std::invalid_argument("Field: components must be >= 1");
  data_.assign(static_cast<std::size_t>(grid.levels()) * grid.interior_count() * components, init);
}

void Field::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Field::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Field::require_finite(const char* what) const {
  if (!all_finite()) throw std::runtime_error(std::string(what) + ": non-finite field entry");
}

ScalarField::ScalarField(const Grid& grid, double init) : grid_(&grid) {
  interior_.assign(static_cast<std::size_t>(grid.levels()) * grid.interior_count(), init);
  boundary_.assign(static_cast<std::size_t>(grid.levels()) * grid.boundary_count(), init);
}

bool ScalarField::all_finite() const {
  for (double v : interior_)
    if (!std::isfinite(v)) return false;
  for (double v : boundary_)
    if (!std::isfinite(v)) return false;
  return true;
}

void ScalarField::require_finite(const char* what) const {
  if (!all_finite()) throw std::runtime_error(std::string(what) + ": non-finite field entry");
}

Field spatial_gradient(const ScalarField& v) {
  const Grid& g = v.grid();
  v.require_finite("spatial_gradient input");
  Field grad(g, g.dim());
  for (int k = 0; k < g.levels(); ++k) {
    for (int idx = 0; idx < g.interior_count(); ++idx) {
      for (int ax = 0; ax < g.dim(); ++ax) {
        const double vp = v.neighbor_value(k, g.neighbor(idx, ax, +1));
        const double vm = v.neighbor_value(k, g.neighbor(idx, ax, -1));
        grad.at(k, idx, ax) = (vp - vm) / (2.0 * g.dx(ax));
      }
    }
  }
  return grad;
}

}  // namespace mdflow
