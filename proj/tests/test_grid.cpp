#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "mdflow/csv_io.hpp"
#include "mdflow/field.hpp"
#include "mdflow/rng.hpp"

using namespace mdflow;

namespace {

GridSpec line_spec(int nx, double lo = 0.0, double hi = std::numbers::pi, int nt = 2, double T = 1.0) {
  GridSpec s;
  s.dim = 1;
  s.lo = {lo, 0.0};
  s.hi = {hi, 1.0};
  s.nx = {nx, 3};
  s.nt = nt;
  s.horizon = T;
  return s;
}

/// Max error of the central-difference gradient of sin against cos.
double sin_gradient_error(int nx) {
  const Grid grid(line_spec(nx));
  ScalarField v(grid);
  for (int k = 0; k < grid.levels(); ++k) {
    for (int i = 0; i < grid.interior_count(); ++i) v.interior(k, i) = std::sin(grid.coord(0, i));
    v.boundary(k, 0) = std::sin(grid.lo(0));
    v.boundary(k, 1) = std::sin(grid.hi(0));
  }
  const Field grad = spatial_gradient(v);
  double err = 0.0;
  for (int i = 0; i < grid.interior_count(); ++i)
    err = std::max(err, std::abs(grad.at(0, i, 0) - std::cos(grid.coord(0, i))));
  return err;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("1d grid nodes and steps") {
  const Grid grid(line_spec(3));
  CHECK(grid.interior_count() == 3);
  CHECK(grid.dx(0) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK(grid.coord(0, 0) == doctest::Approx(std::numbers::pi / 4));
  CHECK(grid.coord(0, 1) == doctest::Approx(std::numbers::pi / 2));
  CHECK(grid.coord(0, 2) == doctest::Approx(3 * std::numbers::pi / 4));
  CHECK(grid.boundary_count() == 2);
  CHECK(grid.dt() == doctest::Approx(0.5));
}

TEST_CASE("2d interior count and boundary ring") {
  GridSpec s;
  s.dim = 2;
  s.lo = {0.0, 0.0};
  s.hi = {1.0, 1.0};
  s.nx = {4, 5};
  s.nt = 2;
  s.horizon = 1.0;
  const Grid grid(s);
  CHECK(grid.interior_count() == 20);
  CHECK(grid.boundary_count() == 2 * (4 + 5) + 4);

  // Edge node neighbors reach the boundary ring at the right positions.
  const int corner = grid.interior_index(0, 0);
  const auto nb = grid.neighbor(corner, 0, -1);
  REQUIRE(nb.is_boundary);
  std::array<double, 2> pos{};
  grid.boundary_position(nb.index, pos);
  CHECK(pos[0] == doctest::Approx(0.0));
  CHECK(pos[1] == doctest::Approx(grid.coord(1, 0)));
}

TEST_CASE("spec validation rejects bad input") {
  CHECK_THROWS_AS(Grid{line_spec(2)}, std::invalid_argument);
  auto s = line_spec(5);
  s.hi[0] = s.lo[0];
  CHECK_THROWS_AS(Grid{s}, std::invalid_argument);
  s = line_spec(5);
  s.lo[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Grid{s}, std::invalid_argument);
  s = line_spec(5);
  s.nt = 1;
  CHECK_THROWS_AS(Grid{s}, std::invalid_argument);
}

TEST_CASE("gradient is zero on constants and exact on affine functions") {
  GridSpec s;
  s.dim = 2;
  s.lo = {-1.0, 0.5};
  s.hi = {1.0, 2.0};
  s.nx = {7, 5};
  s.nt = 3;
  s.horizon = 2.0;
  const Grid grid(s);

  ScalarField c(grid, 4.25);
  const Field gc = spatial_gradient(c);
  for (double v : gc.raw()) CHECK(v == 0.0);

  // affine: 2*x1 - 3*x2 + 1
  ScalarField aff(grid);
  std::array<double, 2> pos{};
  for (int k = 0; k < grid.levels(); ++k) {
    for (int i = 0; i < grid.interior_count(); ++i) {
      grid.node_position(i, pos);
      aff.interior(k, i) = 2.0 * pos[0] - 3.0 * pos[1] + 1.0;
    }
    for (int b = 0; b < grid.boundary_count(); ++b) {
      grid.boundary_position(b, pos);
      aff.boundary(k, b) = 2.0 * pos[0] - 3.0 * pos[1] + 1.0;
    }
  }
  const Field ga = spatial_gradient(aff);
  for (int k = 0; k < grid.levels(); ++k) {
    for (int i = 0; i < grid.interior_count(); ++i) {
      CHECK(ga.at(k, i, 0) == doctest::Approx(2.0).epsilon(1e-13));
      CHECK(ga.at(k, i, 1) == doctest::Approx(-3.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("gradient of sin meets the Taylor remainder bound") {
  // dx = pi/100; central differences of a C^3 function carry error
  // <= dx^2/6 * max|f'''| (here 1), checked with 1% headroom.
  const double dx = std::numbers::pi / 100.0;
  CHECK(sin_gradient_error(99) <= dx * dx * (1.0 / 6.0) * 1.01);
}

TEST_CASE("gradient error is O(dx^2) under refinement") {
  const double e1 = sin_gradient_error(99);   // dx = pi/100
  const double e2 = sin_gradient_error(199);  // dx = pi/200
  const double factor = e1 / e2;
  CHECK(factor >= 3.5);
  CHECK(factor <= 4.5);
}

TEST_CASE("field round trip through accessors and csv") {
  GridSpec s = line_spec(5, -1.0, 1.0, 3, 0.75);
  const Grid grid(s);
  Field f(grid, 2);
  Rng rng(7);
  for (double& v : f.raw()) v = rng.uniform(-5.0, 5.0);
  f.at(2, 3, 1) = 0.123456789;
  CHECK(f.at(2, 3, 1) == 0.123456789);

  const auto tmp = std::filesystem::temp_directory_path() / "mdflow_field_roundtrip.csv";
  write_field_csv(tmp.string(), f);
  const Field g = read_field_csv(tmp.string(), grid, 2);
  for (std::size_t i = 0; i < f.raw().size(); ++i) CHECK(f.raw()[i] == g.raw()[i]);
  std::filesystem::remove(tmp);
}

TEST_CASE("finite check flags bad entries") {
  const Grid grid(line_spec(4));
  Field f(grid, 1);
  f.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(f.all_finite());
  CHECK_THROWS_AS(f.require_finite("test"), std::runtime_error);
}

}  // TEST_SUITE
