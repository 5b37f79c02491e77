#include "pqobs/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pqobs/errors.hpp"
#include "pqobs/penalty.hpp"
#include "pqobs/summation.hpp"

namespace pqobs {

Matrix v_function(const Matrix& z, double mu, double t) {
  if (!(t > 1.0)) throw DomainError("v_function: exponent must exceed 1");
  Matrix out = z;
  if (t == 2.0) return out;
  const double base = mu * mu + z.norm2();
  if (base == 0.0) {
    // t > 2 gives 0 by continuity; for t < 2 z = 0 as well.
    out.fill(0.0);
    return out;
  }
  const double scale = std::pow(base, 0.25 * (t - 2.0));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= scale;
  return out;
}

double v_ratio(const Matrix& z1, const Matrix& z2, double mu, double t) {
  const Matrix v1 = v_function(z1, mu, t);
  const Matrix v2 = v_function(z2, mu, t);
  double num = 0.0, diff = 0.0;
  for (std::size_t k = 0; k < z1.size(); ++k) {
    num += (v1[k] - v2[k]) * (v1[k] - v2[k]);
    diff += (z1[k] - z2[k]) * (z1[k] - z2[k]);
  }
  const double weight = std::pow(mu * mu + z1.norm2() + z2.norm2(), 0.5 * (t - 2.0));
  return num / (weight * diff);
}

VEquivalenceReport v_equivalence_check(double mu, double t, int samples, std::uint64_t seed,
                                       int rows, int cols) {
  if (!(t > 1.0)) throw DomainError("v_equivalence_check: exponent must exceed 1");
  if (samples < 1) throw DomainError("v_equivalence_check: need at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> logmag(-3.0, 1.0);
  std::uniform_int_distribution<int> mode(0, 3);

  auto random_matrix = [&](double magnitude) {
    Matrix m(rows, cols);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = normal(rng);
    const double nrm = m.norm();
    for (std::size_t k = 0; k < m.size(); ++k) m[k] *= magnitude / nrm;
    return m;
  };

  VEquivalenceReport rep;
  rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.ratio_max = 0.0;
  int taken = 0;
  while (taken < samples) {
    Matrix z1 = random_matrix(std::pow(10.0, logmag(rng)));
    Matrix z2;
    switch (mode(rng)) {
      case 0:  // independent
        z2 = random_matrix(std::pow(10.0, logmag(rng)));
        break;
      case 1: {  // nearby
        Matrix d = random_matrix(z1.norm() * std::pow(10.0, -6.0 * std::uniform_real_distribution<double>(0, 1)(rng)));
        z2 = z1;
        for (std::size_t k = 0; k < z2.size(); ++k) z2[k] += d[k];
        break;
      }
      case 2:  // antipodal
        z2 = z1;
        for (std::size_t k = 0; k < z2.size(); ++k) z2[k] = -z2[k] * std::pow(10.0, logmag(rng) * 0.25);
        break;
      default:
        z2 = Matrix(rows, cols);
        break;
    }
    double diff = 0.0;
    for (std::size_t k = 0; k < z1.size(); ++k) diff += (z1[k] - z2[k]) * (z1[k] - z2[k]);
    if (mu + z1.norm() + z2.norm() == 0.0 || diff == 0.0) continue;
    const double r = v_ratio(z1, z2, mu, t);
    rep.ratio_min = std::min(rep.ratio_min, r);
    rep.ratio_max = std::max(rep.ratio_max, r);
    ++taken;
  }
  rep.pass = rep.ratio_max <= 10.0 * rep.ratio_min;
  return rep;
}

ElementField v_of_gradient(const ElementField& du, double mu, double t) {
  ElementField out = du;
  const int count = du.grid.element_count();
  for (int e = 0; e < count; ++e) out.set(e, v_function(du.at(e), mu, t));
  return out;
}

// ---------------------------------------------------------------------------

double offset_length(const Grid& grid, const Offset& h) {
  const double x = h.di * grid.h(0);
  const double y = grid.dim() == 2 ? h.dj * grid.h(1) : 0.0;
  return std::sqrt(x * x + y * y);
}

std::vector<Offset> default_offsets(const Grid& grid, int min_steps, double max_fraction) {
  std::vector<Offset> dirs{{1, 0}};
  if (grid.dim() == 2) dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  const double cap = max_fraction * grid.box().diameter();
  std::vector<Offset> out;
  for (const Offset& d : dirs) {
    for (int k = std::max(1, min_steps);; ++k) {
      const Offset h{k * d.di, k * d.dj};
      if (offset_length(grid, h) > cap * (1.0 + 1e-12)) break;
      out.push_back(h);
    }
  }
  return out;
}

namespace {

void check_offset(const Grid& grid, const Offset& h) {
  if (h.di == 0 && h.dj == 0) throw DomainError("seminorm offset must be nonzero");
  if (grid.dim() == 1 && h.dj != 0) throw DomainError("seminorm offset has a y-component on a 1D grid");
}

double pointwise_distance(const double* a, const double* b, int count) {
  double s = 0.0;
  for (int c = 0; c < count; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s);
}

double power_abs(double x, double t) { return t == 2.0 ? x * x : std::pow(x, t); }

}  // namespace

std::optional<double> difference_norm(const Field& v, const Offset& h, double t) {
  const Grid& grid = v.grid();
  check_offset(grid, h);
  if (t < 1.0) throw DomainError("difference_norm: exponent must be at least 1");
  const int m0 = grid.nodes(0), m1 = grid.dim() == 2 ? grid.nodes(1) : 1;
  const int i0 = std::max(0, -h.di), i1 = m0 - 1 - std::max(0, h.di);
  int j0 = 0, j1 = 0;
  if (grid.dim() == 2) {
    j0 = std::max(0, -h.dj);
    j1 = m1 - 1 - std::max(0, h.dj);
    if (j1 <= j0) return std::nullopt;
  }
  if (i1 <= i0) return std::nullopt;

  const int N = v.components();
  const double* data = v.values().data();
  CompensatedSum sum;
  for (int j = j0; j <= j1; ++j) {
    double wy = 1.0;
    if (grid.dim() == 2) wy = grid.h(1) * ((j == j0 || j == j1) ? 0.5 : 1.0);
    for (int i = i0; i <= i1; ++i) {
      const double wx = grid.h(0) * ((i == i0 || i == i1) ? 0.5 : 1.0);
      const int k = grid.index(i, j);
      const int ks = grid.index(i + h.di, j + h.dj);
      const double d = pointwise_distance(data + k * N, data + ks * N, N);
      sum.add(wx * wy * power_abs(d, t));
    }
  }
  return std::pow(sum.value(), 1.0 / t);
}

std::optional<double> difference_norm(const ElementField& v, const Offset& h, double t) {
  const Grid& grid = v.grid;
  check_offset(grid, h);
  if (t < 1.0) throw DomainError("difference_norm: exponent must be at least 1");
  const std::size_t stride = v.stride();
  const double meas = grid.element_measure();
  CompensatedSum sum;
  bool any = false;
  for (int e = 0; e < grid.element_count(); ++e) {
    const int es = grid.shifted_element(e, h.di, h.dj);
    if (es < 0) continue;
    any = true;
    const double d = pointwise_distance(v.values.data() + e * stride, v.values.data() + es * stride,
                                        static_cast<int>(stride));
    sum.add(meas * power_abs(d, t));
  }
  if (!any) return std::nullopt;
  return std::pow(sum.value(), 1.0 / t);
}

namespace {

template <class V>
double seminorm_impl(const V& v, const Grid& grid, double s, double t, const std::vector<Offset>& offsets) {
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("nikolskii_seminorm: s must lie in (0,1]");
  if (t < 1.0) throw DomainError("nikolskii_seminorm: exponent must be at least 1");
  double best = 0.0;
  bool any = false;
  for (const Offset& h : offsets) {
    const auto d = difference_norm(v, h, t);
    if (!d) continue;
    any = true;
    best = std::max(best, *d * std::pow(offset_length(grid, h), -s));
  }
  if (!any) throw DomainError("nikolskii_seminorm: every offset leaves the domain");
  return best;
}

}  // namespace

double nikolskii_seminorm(const Field& v, double s, double t, const std::vector<Offset>& offsets) {
  return seminorm_impl(v, v.grid(), s, t, offsets);
}

double nikolskii_seminorm(const ElementField& v, double s, double t, const std::vector<Offset>& offsets) {
  return seminorm_impl(v, v.grid, s, t, offsets);
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) throw DomainError("fit_loglog_slope: values must be positive");
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("fit_loglog_slope: abscissae coincide");
  return (n * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------

namespace {

void check_cutoff_inputs(const std::vector<double>& b, double rho, double sigma, double t) {
  if (!(rho > 0.0 && rho < sigma)) throw DomainError("cutoff: need 0 < rho < sigma");
  if (!(sigma - rho < 1.0)) throw DomainError("cutoff: need sigma - rho < 1");
  if (!(t > 1.0)) throw DomainError("cutoff: exponent must exceed 1");
  if (b.size() < 2) throw DomainError("cutoff: need at least two radial samples");
  for (double v : b) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("cutoff: radial profile must be positive");
  }
}

template <class Fn>
double trapezoid(const std::vector<double>& b, double dr, Fn fn) {
  CompensatedSum s;
  for (std::size_t k = 0; k + 1 < b.size(); ++k) s.add(0.5 * dr * (fn(b[k]) + fn(b[k + 1])));
  return s.value();
}

}  // namespace

double cutoff_energy(const std::vector<double>& b, double rho, double sigma, double t,
                     const std::vector<double>& phi) {
  check_cutoff_inputs(b, rho, sigma, t);
  if (phi.size() != b.size()) throw ShapeError("cutoff_energy: profile and weights differ in length");
  const double dr = (sigma - rho) / static_cast<double>(b.size() - 1);
  CompensatedSum s;
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    const double slope = std::abs(phi[k + 1] - phi[k]) / dr;
    s.add(dr * (slope + std::pow(slope, t)) * 0.5 * (b[k] + b[k + 1]));
  }
  return s.value();
}

CutoffReport cutoff_functional(const std::vector<double>& b, double rho, double sigma, double t,
                               double delta) {
  check_cutoff_inputs(b, rho, sigma, t);
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("cutoff: delta must lie in (0,1)");
  const double d = sigma - rho;
  const double dr = d / static_cast<double>(b.size() - 1);

  CutoffReport rep;
  const double A = trapezoid(b, dr, [](double v) { return 1.0 / v; });
  rep.profile.resize(b.size());
  rep.profile[0] = 1.0;
  CompensatedSum acc;
  for (std::size_t k = 1; k < b.size(); ++k) {
    acc.add(0.5 * dr * (1.0 / b[k - 1] + 1.0 / b[k]));
    rep.profile[k] = 1.0 - acc.value() / A;
  }
  rep.profile.back() = 0.0;

  rep.J_optimal = cutoff_energy(b, rho, sigma, t, rep.profile);
  rep.J_closed_form = d / A + trapezoid(b, dr, [t](double v) { return std::pow(v, 1.0 - t); }) / std::pow(A, t);
  const double bd = trapezoid(b, dr, [delta](double v) { return std::pow(v, delta); });
  rep.J_bound = std::pow(d, -t - 1.0 / delta) * std::pow(bd, 1.0 / delta);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

double cubic_bspline(double x) {
  x = std::abs(x);
  if (x >= 2.0) return 0.0;
  if (x >= 1.0) return (2.0 - x) * (2.0 - x) * (2.0 - x) / 6.0;
  return 2.0 / 3.0 - x * x + 0.5 * x * x * x;
}

double cutoff_eta(const Box& box, const Point& x, double width) {
  if (width <= 0.0) return 1.0;
  const double d = box.distance_to_boundary(x);
  if (d <= 0.5 * width) return 0.0;
  if (d >= width) return 1.0;
  const double s = (d - 0.5 * width) / (0.5 * width);
  return s * s * (3.0 - 2.0 * s);
}

// (w * f)(k) - f(k), summing differences so constant fields stay exact.
double smoothing_increment(const Field& f, int k, int comp, const std::vector<double>& wx,
                           const std::vector<double>& wy) {
  const Grid& grid = f.grid();
  const int kx = static_cast<int>(wx.size() / 2), ky = static_cast<int>(wy.size() / 2);
  const int i = grid.ix(k), j = grid.iy(k);
  const int m0 = grid.nodes(0), m1 = grid.dim() == 2 ? grid.nodes(1) : 1;
  const double center = f(k, comp);
  double s = 0.0;
  for (int b = -ky; b <= ky; ++b) {
    const int jj = std::clamp(j + b, 0, m1 - 1);
    double row = 0.0;
    for (int a = -kx; a <= kx; ++a) {
      const int ii = std::clamp(i + a, 0, m0 - 1);
      row += wx[static_cast<std::size_t>(a + kx)] * (f(grid.index(ii, jj), comp) - center);
    }
    s += wy[static_cast<std::size_t>(b + ky)] * row;
  }
  return s;
}

}  // namespace

std::vector<double> mollifier_weights(double radius, double h) {
  if (!(h > 0.0)) throw DomainError("mollifier_weights: grid step must be positive");
  if (!(radius >= 0.0)) throw DomainError("mollifier_weights: radius must be non-negative");
  int K = static_cast<int>(std::floor(radius / h));
  if (K > 0 && K * h >= radius) --K;  // support is open
  std::vector<double> w(static_cast<std::size_t>(2 * K + 1));
  double total = 0.0;
  for (int k = -K; k <= K; ++k) {
    const double v = K == 0 ? 1.0 : cubic_bspline(2.0 * k * h / radius);
    w[static_cast<std::size_t>(k + K)] = v;
    total += v;
  }
  for (int k = 0; k < K; ++k) {
    // enforce exact symmetry before normalising
    const double m = 0.5 * (w[static_cast<std::size_t>(k)] + w[static_cast<std::size_t>(2 * K - k)]);
    w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(2 * K - k)] = m;
  }
  for (double& v : w) v /= total;
  return w;
}

Field mollified_competitor(const Field& u, const Field& psi, double eta_width, double radius) {
  if (!u.same_shape(psi)) throw ShapeError("mollified_competitor: u and psi differ in shape");
  const Grid& grid = u.grid();
  const std::vector<double> wx = mollifier_weights(radius, grid.h(0));
  const std::vector<double> wy = grid.dim() == 2 ? mollifier_weights(radius, grid.h(1)) : std::vector<double>{1.0};
  Field out(grid, u.components());
  for (int k = 0; k < grid.node_count(); ++k) {
    const double eta = cutoff_eta(grid.box(), grid.node_point(k), eta_width);
    for (int r = 0; r < u.components(); ++r) {
      if (eta == 0.0) {
        out(k, r) = u(k, r);
        continue;
      }
      const double du = smoothing_increment(u, k, r, wx, wy);
      const double dpsi = smoothing_increment(psi, k, r, wx, wy);
      out(k, r) = u(k, r) + eta * (du - dpsi);
    }
  }
  return out;
}

double plain_energy(const Integrand& f, const Field& u) {
  const Grid& grid = u.grid();
  Matrix z(u.components(), grid.dim());
  const double meas = grid.element_measure();
  CompensatedSum s;
  for (int e = 0; e < grid.element_count(); ++e) {
    element_gradient(u, e, z);
    s.add(meas * f.eval(grid.element_centroid(e), z));
  }
  return s.value();
}

LavrentievReport lavrentiev_probe(const ObstacleProblem& problem, const Field& u, double eta_width,
                                  const std::vector<double>& radii, double feasibility_tol) {
  if (!u.same_shape(problem.psi())) throw ShapeError("lavrentiev_probe: field does not live on the problem grid");
  if (radii.empty()) throw PreconditionError("lavrentiev_probe: need at least one mollifier radius");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw PreconditionError("lavrentiev_probe: radii must be positive");
    if (k > 0 && !(radii[k] < radii[k - 1])) throw PreconditionError("lavrentiev_probe: radii must decrease");
    if (eta_width > 0.0 && !(radii[k] < eta_width)) {
      throw PreconditionError("lavrentiev_probe: radii must be smaller than the cutoff width");
    }
  }
  const double violation = max_violation(u, problem.psi());
  if (violation > feasibility_tol) {
    std::ostringstream msg;
    msg << "lavrentiev_probe: field violates the obstacle by " << violation;
    throw PreconditionError(msg.str());
  }

  LavrentievReport rep;
  rep.radii = radii;
  rep.base_energy = plain_energy(problem.integrand(), u);
  rep.min_slack = std::numeric_limits<double>::infinity();
  const Field& psi = problem.psi();
  for (double r : radii) {
    const Field ue = mollified_competitor(u, psi, eta_width, r);
    for (std::size_t k = 0; k < ue.size(); ++k) {
      rep.min_slack = std::min(rep.min_slack, ue.values()[k] - psi.values()[k]);
    }
    rep.energies.push_back(plain_energy(problem.integrand(), ue));
  }
  // The competitor is a convex combination of shifted slacks, so it can only
  // be as infeasible as u itself, up to rounding.
  rep.feasible = rep.min_slack >= -(violation + 1e-12 * std::max(1.0, rep.base_energy));
  rep.gap_estimate = std::max(0.0, rep.energies.back() - rep.base_energy);
  return rep;
}

// ---------------------------------------------------------------------------

GapCondition gap_check(const GrowthParams& params, int n, bool autonomous) {
  if (n < 1) throw DomainError("gap_check: dimension must be positive");
  const double p = params.p, q = params.q;
  GapCondition g;
  g.q_max_autonomous = p + 1.0;
  if (n > 1) g.q_max_autonomous = std::min(n * p / (n - 1.0), p + 1.0);
  if (params.alpha) g.q_max_nonautonomous = (n + *params.alpha) * p / n;
  if (autonomous) {
    g.applicable_bound = g.q_max_autonomous;
  } else {
    // Without a Hoelder exponent only standard growth is covered.
    g.applicable_bound = g.q_max_nonautonomous ? *g.q_max_nonautonomous : p;
  }
  g.satisfied = q == p || q < g.applicable_bound;
  return g;
}

DiagnosticsReport diagnose(const ObstacleProblem& problem, const Field& u, const DiagnosticsOptions& options) {
  if (!u.same_shape(problem.psi())) throw ShapeError("diagnose: field does not live on the problem grid");
  const Integrand& f = problem.integrand();
  const GrowthParams& gp = f.params();
  const Grid& grid = problem.grid();

  DiagnosticsReport rep;
  rep.w1q_norm = w1q_norm(u, gp.q);
  const ElementField du = gradient(u);
  const ElementField vdu = v_of_gradient(du, gp.mu, gp.p);
  rep.v_l2 = lp_norm(vdu, 2.0);
  rep.violation = max_violation(u, problem.psi());
  rep.gap_condition = gap_check(gp, grid.dim(), f.autonomous());

  const auto offsets = default_offsets(grid);
  for (double s : options.seminorm_s) {
    for (double t : options.seminorm_t) {
      double value = 0.0;
      switch (options.target) {
        case SeminormTarget::Field:
          value = nikolskii_seminorm(u, s, t, offsets);
          break;
        case SeminormTarget::Gradient:
          value = nikolskii_seminorm(du, s, t, offsets);
          break;
        case SeminormTarget::VGradient:
          value = nikolskii_seminorm(vdu, s, t, offsets);
          break;
      }
      rep.nikolskii[{s, t}] = value;
    }
  }
  if (options.lavrentiev) {
    rep.lavrentiev_probe = lavrentiev_probe(problem, u, options.eta_width, options.radii);
  }
  return rep;
}

}  // namespace pqobs
