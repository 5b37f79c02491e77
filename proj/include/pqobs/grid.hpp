#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pqobs/geometry.hpp"

namespace pqobs {

/// Uniform tensor grid on a box in dimension 1 or 2. Nodes are numbered with
/// the x index running fastest: k = i + m_0 * j. In 2D every cell
/// [x_i, x_{i+1}] x [y_j, y_{j+1}] is split along the diagonal from (i,j) to
/// (i+1,j+1) into
///   lower triangle (type 0): (i,j), (i+1,j), (i+1,j+1)
///   upper triangle (type 1): (i,j), (i+1,j+1), (i,j+1)
/// with element index e = 2 * (i + (m_0-1) * j) + type. In 1D element i is the
/// interval [x_i, x_{i+1}].
class Grid {
 public:
  Grid() = default;
  Grid(const Box& box, int m0, int m1 = 1);

  static Grid line(double a, double b, int m) { return Grid(Box::interval(a, b), m); }
  static Grid square(double a, double b, int m) { return Grid(Box::rectangle(a, b, a, b), m, m); }

  int dim() const { return box_.n; }
  const Box& box() const { return box_; }
  int nodes(int axis) const { return m_[axis]; }
  double h(int axis) const { return h_[axis]; }
  int node_count() const { return m_[0] * m_[1]; }
  int element_count() const;
  double element_measure() const;

  int index(int i, int j = 0) const { return i + m_[0] * j; }
  int ix(int k) const { return k % m_[0]; }
  int iy(int k) const { return k / m_[0]; }
  Point node_point(int k) const;
  bool is_boundary(int k) const;
  std::vector<bool> boundary_mask() const;

  /// Node indices of element e (2 for intervals, 3 for triangles).
  std::array<int, 3> element_nodes(int e) const;
  Point element_centroid(int e) const;

  /// Mass-lumped nodal weights: each element contributes measure/(n+1) to
  /// each of its vertices. They sum to |Omega|.
  const std::vector<double>& lumped_weights() const { return weights_; }

  /// Element index shifted by a grid vector (di, dj), or -1 if the shifted
  /// element leaves the grid.
  int shifted_element(int e, int di, int dj) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  Box box_;
  std::array<int, 2> m_{2, 1};
  std::array<double, 2> h_{1.0, 1.0};
  std::vector<double> weights_;
};

/// Nodal field u = (u_1, ..., u_N) stored interleaved per node.
class Field {
 public:
  Field() = default;
  Field(Grid grid, int components, double fill = 0.0);

  const Grid& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int node, int comp = 0) { return values_[static_cast<std::size_t>(node * components_ + comp)]; }
  double operator()(int node, int comp = 0) const {
    return values_[static_cast<std::size_t>(node * components_ + comp)];
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Field& other) const {
    return components_ == other.components_ && grid_ == other.grid_;
  }

 private:
  Grid grid_;
  int components_ = 1;
  std::vector<double> values_;
};

/// Per-element N x n matrices (the gradient of a P1 field, or a function of
/// it), stored contiguously element after element.
struct ElementField {
  Grid grid;
  int rows = 1;
  int cols = 1;
  std::vector<double> values;

  std::size_t stride() const { return static_cast<std::size_t>(rows * cols); }
  Matrix at(int e) const;
  void set(int e, const Matrix& m);
};

/// Exact constant gradient of the piecewise-linear interpolant on each element.
ElementField gradient(const Field& u);

/// Gradient of u on a single element, written into z (N x n).
void element_gradient(const Field& u, int e, Matrix& z);

/// Discrete L^t norm: mass-lumped quadrature for nodal fields (pointwise
/// Euclidean norm across components), exact element quadrature for
/// element fields (pointwise Frobenius norm). Throws DomainError if t < 1.
double lp_norm(const Field& u, double t);
double lp_norm(const ElementField& du, double t);

/// ||u||_{L^q} + ||Du||_{L^q}.
double w1q_norm(const Field& u, double q);

Field sample(const Grid& grid, const std::function<double(const Point&)>& fn);
Field sample(const Grid& grid, int components,
             const std::function<double(const Point&, int)>& fn);

/// Value of the P1 interpolant of u at an arbitrary point of the box.
double interpolate(const Field& u, const Point& x, int comp = 0);

/// True when every node of `coarse` is a node of `fine` (same box, refinement
/// ratio an integer per axis).
bool nested(const Grid& coarse, const Grid& fine);

/// Piecewise-linear interpolation onto a finer nested grid.
Field prolong(const Field& coarse, const Grid& fine);
/// Injection onto a coarser nested grid.
Field restrict_to(const Field& fine, const Grid& coarse);

// Plain-text field format:
//   pqfield n m1 [m2] N
//   <x> [<y>] <u_1> ... <u_N>      one line per node, node order as in Grid
// Lines beginning with '#' are comments and may appear anywhere.
void write_field(std::ostream& out, const Field& u, const std::vector<std::string>& comments = {});
void write_field(const std::string& path, const Field& u,
                 const std::vector<std::string>& comments = {});
Field read_field(std::istream& in);
Field read_field(const std::string& path);
/// CSV with columns x[,y],u1..uN for plotting.
void write_field_csv(const std::string& path, const Field& u,
                     const std::vector<std::string>& comments = {});

}  // namespace pqobs
