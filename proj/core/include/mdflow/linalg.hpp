#pragma once

#include <cmath>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace mdflow {

/// Dense row-major matrix for the small (d, p <= 2-ish) coefficient blocks
/// of the model problems. Not a linear-algebra library; just enough for
/// drift/cost assembly.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::initializer_list<double> values) : Mat(r, c) {
    if (static_cast<int>(values.size()) != r * c)
      throw std::invalid_argument("Mat: initializer size mismatch");
    std::size_t k = 0;
    for (double v : values) data[k++] = v;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat scalar(double v) { return Mat(1, 1, {v}); }

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  /// out = this * x
  void apply(std::span<const double> x, std::span<double> out) const {
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc += (*this)(r, c) * x[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = acc;
    }
  }

  /// out = this^T * x
  void apply_transpose(std::span<const double> x, std::span<double> out) const {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) acc += (*this)(r, c) * x[static_cast<std::size_t>(r)];
      out[static_cast<std::size_t>(c)] = acc;
    }
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace mdflow
