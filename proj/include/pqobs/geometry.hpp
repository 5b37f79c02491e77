#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace pqobs {

/// A point of the plane; for one-dimensional domains only x[0] is used.
using Point = std::array<double, 2>;

/// Axis-aligned box [lo_0, hi_0] (x [lo_1, hi_1]) in dimension 1 or 2.
struct Box {
  int n = 2;
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};

  static Box interval(double a, double b) { return Box{1, {a, 0.0}, {b, 0.0}}; }
  static Box rectangle(double ax, double bx, double ay, double by) {
    return Box{2, {ax, ay}, {bx, by}};
  }

  double measure() const {
    double m = hi[0] - lo[0];
    if (n == 2) m *= hi[1] - lo[1];
    return m;
  }
  double diameter() const {
    double d2 = 0.0;
    for (int a = 0; a < n; ++a) d2 += (hi[a] - lo[a]) * (hi[a] - lo[a]);
    return std::sqrt(d2);
  }
  bool contains(const Point& x, double tol = 0.0) const {
    for (int a = 0; a < n; ++a) {
      if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) return false;
    }
    return true;
  }
  /// Euclidean distance from an interior point to the boundary of the box.
  double distance_to_boundary(const Point& x) const {
    double d = std::min(x[0] - lo[0], hi[0] - x[0]);
    if (n == 2) d = std::min({d, x[1] - lo[1], hi[1] - x[1]});
    return d;
  }
};

inline double distance(const Point& a, const Point& b, int n) {
  double d2 = 0.0;
  for (int k = 0; k < n; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(d2);
}

/// Dense row-major N x n matrix, the shape of a gradient Du of an R^N valued
/// map on an n-dimensional domain.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {}

  static Matrix from(int rows, int cols, std::vector<double> values) {
    Matrix m(rows, cols);
    m.data_ = std::move(values);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  void resize(int rows, int cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(static_cast<std::size_t>(rows * cols), 0.0);
  }
  void fill(double v) { data_.assign(data_.size(), v); }

  /// Squared Frobenius norm.
  double norm2() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend double dot(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.data_.size(); ++k) s += a.data_[k] * b.data_[k];
    return s;
  }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace pqobs
