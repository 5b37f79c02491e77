#include "pqobs/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pqobs/errors.hpp"

namespace pqobs {

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

Grid::Grid(const Box& box, int m0, int m1) : box_(box) {
  if (box.n != 1 && box.n != 2) throw DomainError("grid dimension must be 1 or 2");
  m_ = {m0, box.n == 2 ? m1 : 1};
  for (int a = 0; a < box.n; ++a) {
    if (m_[a] < 2) throw ResolutionError("grid needs at least 2 nodes per axis");
    if (!(box.hi[a] > box.lo[a])) throw DomainError("grid box must have positive extent");
    h_[a] = (box.hi[a] - box.lo[a]) / (m_[a] - 1);
  }
  weights_.assign(static_cast<std::size_t>(node_count()), 0.0);
  const double share = element_measure() / (box.n + 1);
  for (int e = 0; e < element_count(); ++e) {
    const auto nodes = element_nodes(e);
    for (int v = 0; v <= box.n; ++v) weights_[static_cast<std::size_t>(nodes[v])] += share;
  }
}

int Grid::element_count() const {
  if (box_.n == 1) return m_[0] - 1;
  return 2 * (m_[0] - 1) * (m_[1] - 1);
}

double Grid::element_measure() const {
  if (box_.n == 1) return h_[0];
  return 0.5 * h_[0] * h_[1];
}

Point Grid::node_point(int k) const {
  Point x{0.0, 0.0};
  const int i = ix(k);
  x[0] = i == m_[0] - 1 ? box_.hi[0] : box_.lo[0] + i * h_[0];
  if (box_.n == 2) {
    const int j = iy(k);
    x[1] = j == m_[1] - 1 ? box_.hi[1] : box_.lo[1] + j * h_[1];
  }
  return x;
}

bool Grid::is_boundary(int k) const {
  const int i = ix(k);
  if (i == 0 || i == m_[0] - 1) return true;
  if (box_.n == 2) {
    const int j = iy(k);
    if (j == 0 || j == m_[1] - 1) return true;
  }
  return false;
}

std::vector<bool> Grid::boundary_mask() const {
  std::vector<bool> mask(static_cast<std::size_t>(node_count()));
  for (int k = 0; k < node_count(); ++k) mask[static_cast<std::size_t>(k)] = is_boundary(k);
  return mask;
}

std::array<int, 3> Grid::element_nodes(int e) const {
  if (box_.n == 1) return {e, e + 1, -1};
  const int cell = e / 2;
  const int i = cell % (m_[0] - 1);
  const int j = cell / (m_[0] - 1);
  const int a = index(i, j);
  const int b = index(i + 1, j);
  const int c = index(i + 1, j + 1);
  const int d = index(i, j + 1);
  if (e % 2 == 0) return {a, b, c};
  return {a, c, d};
}

Point Grid::element_centroid(int e) const {
  const auto nodes = element_nodes(e);
  Point c{0.0, 0.0};
  const int nv = box_.n + 1;
  for (int v = 0; v < nv; ++v) {
    const Point x = node_point(nodes[v]);
    c[0] += x[0];
    c[1] += x[1];
  }
  c[0] /= nv;
  c[1] /= nv;
  return c;
}

int Grid::shifted_element(int e, int di, int dj) const {
  if (box_.n == 1) {
    const int t = e + di;
    return (t >= 0 && t < m_[0] - 1) ? t : -1;
  }
  const int cell = e / 2;
  const int i = cell % (m_[0] - 1) + di;
  const int j = cell / (m_[0] - 1) + dj;
  if (i < 0 || j < 0 || i >= m_[0] - 1 || j >= m_[1] - 1) return -1;
  return 2 * (i + (m_[0] - 1) * j) + e % 2;
}

bool Grid::operator==(const Grid& other) const {
  if (box_.n != other.box_.n || m_ != other.m_) return false;
  for (int a = 0; a < box_.n; ++a) {
    if (!close(box_.lo[a], other.box_.lo[a]) || !close(box_.hi[a], other.box_.hi[a])) return false;
  }
  return true;
}

Field::Field(Grid grid, int components, double fill)
    : grid_(std::move(grid)), components_(components) {
  if (components < 1) throw ShapeError("field needs at least one component");
  values_.assign(static_cast<std::size_t>(grid_.node_count() * components), fill);
}

Matrix ElementField::at(int e) const {
  Matrix m(rows, cols);
  const std::size_t off = static_cast<std::size_t>(e) * stride();
  for (std::size_t k = 0; k < stride(); ++k) m[k] = values[off + k];
  return m;
}

void ElementField::set(int e, const Matrix& m) {
  const std::size_t off = static_cast<std::size_t>(e) * stride();
  for (std::size_t k = 0; k < stride(); ++k) values[off + k] = m[k];
}

void element_gradient(const Field& u, int e, Matrix& z) {
  const Grid& g = u.grid();
  const int N = u.components();
  const int n = g.dim();
  if (z.rows() != N || z.cols() != n) z.resize(N, n);
  const auto v = g.element_nodes(e);
  if (n == 1) {
    const double inv = 1.0 / g.h(0);
    for (int r = 0; r < N; ++r) z(r, 0) = (u(v[1], r) - u(v[0], r)) * inv;
    return;
  }
  const double ihx = 1.0 / g.h(0);
  const double ihy = 1.0 / g.h(1);
  if (e % 2 == 0) {
    // (i,j), (i+1,j), (i+1,j+1)
    for (int r = 0; r < N; ++r) {
      z(r, 0) = (u(v[1], r) - u(v[0], r)) * ihx;
      z(r, 1) = (u(v[2], r) - u(v[1], r)) * ihy;
    }
  } else {
    // (i,j), (i+1,j+1), (i,j+1)
    for (int r = 0; r < N; ++r) {
      z(r, 0) = (u(v[1], r) - u(v[2], r)) * ihx;
      z(r, 1) = (u(v[2], r) - u(v[0], r)) * ihy;
    }
  }
}

ElementField gradient(const Field& u) {
  const Grid& g = u.grid();
  ElementField du{g, u.components(), g.dim(), {}};
  du.values.resize(static_cast<std::size_t>(g.element_count()) * du.stride());
  Matrix z(du.rows, du.cols);
  for (int e = 0; e < g.element_count(); ++e) {
    element_gradient(u, e, z);
    du.set(e, z);
  }
  return du;
}

double lp_norm(const Field& u, double t) {
  if (!(t >= 1.0)) throw DomainError("L^t norm requires t >= 1");
  const auto& w = u.grid().lumped_weights();
  double sum = 0.0;
  for (int k = 0; k < u.grid().node_count(); ++k) {
    double a2 = 0.0;
    for (int r = 0; r < u.components(); ++r) a2 += u(k, r) * u(k, r);
    sum += w[static_cast<std::size_t>(k)] * std::pow(a2, 0.5 * t);
  }
  return std::pow(sum, 1.0 / t);
}

double lp_norm(const ElementField& du, double t) {
  if (!(t >= 1.0)) throw DomainError("L^t norm requires t >= 1");
  const double meas = du.grid.element_measure();
  const std::size_t stride = du.stride();
  double sum = 0.0;
  for (int e = 0; e < du.grid.element_count(); ++e) {
    double a2 = 0.0;
    const std::size_t off = static_cast<std::size_t>(e) * stride;
    for (std::size_t k = 0; k < stride; ++k) a2 += du.values[off + k] * du.values[off + k];
    sum += meas * std::pow(a2, 0.5 * t);
  }
  return std::pow(sum, 1.0 / t);
}

double w1q_norm(const Field& u, double q) { return lp_norm(u, q) + lp_norm(gradient(u), q); }

Field sample(const Grid& grid, const std::function<double(const Point&)>& fn) {
  Field u(grid, 1);
  for (int k = 0; k < grid.node_count(); ++k) u(k) = fn(grid.node_point(k));
  return u;
}

Field sample(const Grid& grid, int components, const std::function<double(const Point&, int)>& fn) {
  Field u(grid, components);
  for (int k = 0; k < grid.node_count(); ++k) {
    const Point x = grid.node_point(k);
    for (int r = 0; r < components; ++r) u(k, r) = fn(x, r);
  }
  return u;
}

double interpolate(const Field& u, const Point& x, int comp) {
  const Grid& g = u.grid();
  const Box& box = g.box();
  auto locate = [&](int axis, double& local) {
    const double s = (x[axis] - box.lo[axis]) / g.h(axis);
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, g.nodes(axis) - 2);
    local = s - i;
    return i;
  };
  double xi = 0.0;
  const int i = locate(0, xi);
  if (g.dim() == 1) return (1.0 - xi) * u(i, comp) + xi * u(i + 1, comp);
  double eta = 0.0;
  const int j = locate(1, eta);
  const double ua = u(g.index(i, j), comp);
  const double ub = u(g.index(i + 1, j), comp);
  const double uc = u(g.index(i + 1, j + 1), comp);
  const double ud = u(g.index(i, j + 1), comp);
  if (eta <= xi) return ua + xi * (ub - ua) + eta * (uc - ub);
  return ua + eta * (ud - ua) + xi * (uc - ud);
}

bool nested(const Grid& coarse, const Grid& fine) {
  if (coarse.dim() != fine.dim()) return false;
  for (int a = 0; a < coarse.dim(); ++a) {
    if (!close(coarse.box().lo[a], fine.box().lo[a]) || !close(coarse.box().hi[a], fine.box().hi[a])) {
      return false;
    }
    if ((fine.nodes(a) - 1) % (coarse.nodes(a) - 1) != 0) return false;
  }
  return true;
}

Field prolong(const Field& coarse, const Grid& fine) {
  if (!nested(coarse.grid(), fine)) throw ShapeError("prolong: grids are not nested");
  Field out(fine, coarse.components());
  for (int k = 0; k < fine.node_count(); ++k) {
    const Point x = fine.node_point(k);
    for (int r = 0; r < coarse.components(); ++r) out(k, r) = interpolate(coarse, x, r);
  }
  return out;
}

Field restrict_to(const Field& fine, const Grid& coarse) {
  if (!nested(coarse, fine.grid())) throw ShapeError("restrict: grids are not nested");
  Field out(coarse, fine.components());
  const int rx = (fine.grid().nodes(0) - 1) / (coarse.nodes(0) - 1);
  const int ry = coarse.dim() == 2 ? (fine.grid().nodes(1) - 1) / (coarse.nodes(1) - 1) : 0;
  for (int k = 0; k < coarse.node_count(); ++k) {
    const int kf = fine.grid().index(coarse.ix(k) * rx, coarse.iy(k) * ry);
    for (int r = 0; r < fine.components(); ++r) out(k, r) = fine(kf, r);
  }
  return out;
}

void write_field(std::ostream& out, const Field& u, const std::vector<std::string>& comments) {
  const Grid& g = u.grid();
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "pqfield " << g.dim() << ' ' << g.nodes(0);
  if (g.dim() == 2) out << ' ' << g.nodes(1);
  out << ' ' << u.components() << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < g.node_count(); ++k) {
    const Point x = g.node_point(k);
    out << x[0];
    if (g.dim() == 2) out << ' ' << x[1];
    for (int r = 0; r < u.components(); ++r) out << ' ' << u(k, r);
    out << '\n';
  }
}

void write_field(const std::string& path, const Field& u, const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_field(out, u, comments);
}

Field read_field(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw ShapeError("field file: missing header");
  std::istringstream header(line);
  std::string magic;
  int n = 0, m0 = 0, m1 = 1, N = 0;
  header >> magic >> n >> m0;
  if (n == 2) header >> m1;
  header >> N;
  if (magic != "pqfield" || !header || (n != 1 && n != 2) || m0 < 2 || m1 < 1 || N < 1) {
    throw ShapeError("field file: malformed header '" + line + "'");
  }
  const int count = m0 * m1;
  std::vector<Point> coords(static_cast<std::size_t>(count));
  std::vector<double> values(static_cast<std::size_t>(count * N));
  for (int k = 0; k < count; ++k) {
    if (!next_line()) throw ShapeError("field file: expected " + std::to_string(count) + " node lines");
    std::istringstream row(line);
    Point x{0.0, 0.0};
    row >> x[0];
    if (n == 2) row >> x[1];
    for (int r = 0; r < N; ++r) row >> values[static_cast<std::size_t>(k * N + r)];
    if (!row) throw ShapeError("field file: malformed node line '" + line + "'");
    coords[static_cast<std::size_t>(k)] = x;
  }
  const Point lo = coords.front();
  const Point hi = coords.back();
  const Box box = n == 1 ? Box::interval(lo[0], hi[0]) : Box::rectangle(lo[0], hi[0], lo[1], hi[1]);
  Field u(Grid(box, m0, m1), N);
  u.values() = std::move(values);
  return u;
}

Field read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field file " + path);
  return read_field(in);
}

void write_field_csv(const std::string& path, const Field& u, const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const Grid& g = u.grid();
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "x";
  if (g.dim() == 2) out << ",y";
  for (int r = 0; r < u.components(); ++r) out << ",u" << (r + 1);
  out << '\n' << std::setprecision(17);
  for (int k = 0; k < g.node_count(); ++k) {
    const Point x = g.node_point(k);
    out << x[0];
    if (g.dim() == 2) out << ',' << x[1];
    for (int r = 0; r < u.components(); ++r) out << ',' << u(k, r);
    out << '\n';
  }
}

}  // namespace pqobs
