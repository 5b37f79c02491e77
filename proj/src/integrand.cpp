#include "pqobs/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "pqobs/errors.hpp"

namespace pqobs {

namespace {

// base^e for base >= 0 with the integer and half-integer exponents of the
// common cases short-circuited.
double power(double base, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return base;
  if (e == 2.0) return base * base;
  if (e == 0.5) return std::sqrt(base);
  if (e == 0.25) return std::sqrt(std::sqrt(base));
  if (e == 1.5) return base * std::sqrt(base);
  if (base == 0.0) {
    if (e < 0.0) throw SingularityError("integrand gradient is singular at z = 0");
    return 0.0;
  }
  return std::pow(base, e);
}

void require_finite(const Matrix& z) {
  if (!z.all_finite()) throw DomainError("integrand evaluated at a non-finite gradient");
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

Point random_point(const Box& box, std::mt19937_64& rng) {
  Point x{0.0, 0.0};
  for (int a = 0; a < box.n; ++a) {
    std::uniform_real_distribution<double> u(box.lo[a], box.hi[a]);
    x[a] = u(rng);
  }
  return x;
}

// Uniform in the Frobenius ball of the given radius.
Matrix random_matrix(int rows, int cols, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix z(rows, cols);
  double n2 = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = normal(rng);
    n2 += z[k] * z[k];
  }
  const double dim = static_cast<double>(z.size());
  const double r = radius * std::pow(unit(rng), 1.0 / dim);
  const double scale = n2 > 0.0 ? r / std::sqrt(n2) : 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) z[k] *= scale;
  return z;
}

Matrix random_matrix_with_norm(int rows, int cols, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  double n2 = 0.0;
  while (n2 == 0.0) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = normal(rng);
      n2 += z[k] * z[k];
    }
  }
  const double scale = norm / std::sqrt(n2);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] *= scale;
  return z;
}

double reference_power(const GrowthParams& p, const Matrix& z) {
  return power(p.mu * p.mu + z.norm2(), 0.5 * p.p);
}

}  // namespace

void GrowthParams::validate() const {
  std::ostringstream msg;
  if (!(p >= 2.0)) msg << "p must be >= 2 (got " << p << "); ";
  if (!(q >= p)) msg << "q must be >= p (got q=" << q << ", p=" << p << "); ";
  if (!(mu >= 0.0)) msg << "mu must be >= 0; ";
  if (!(lambda > 0.0)) msg << "lambda must be > 0; ";
  if (!(Lambda > 0.0)) msg << "Lambda must be > 0; ";
  if (alpha && !(*alpha > 0.0 && *alpha <= 1.0)) msg << "alpha must lie in (0,1]; ";
  const std::string s = msg.str();
  if (!s.empty()) throw DomainError("invalid growth parameters: " + s);
}

Coefficient Coefficient::constant(double value) {
  Coefficient c{};
  c.is_constant_ = true;
  c.value_ = value;
  return c;
}

Coefficient Coefficient::expression(std::function<double(const Point&)> fn) {
  Coefficient c = constant(0.0);
  c.is_constant_ = false;
  c.fn_ = std::move(fn);
  return c;
}

std::string to_string(IntegrandKind kind) {
  switch (kind) {
    case IntegrandKind::PPower: return "p-power";
    case IntegrandKind::PPowerRegularized: return "p-power-regularized";
    case IntegrandKind::DoublePhase: return "double-phase";
    case IntegrandKind::HolderModulated: return "holder-modulated";
    case IntegrandKind::User: return "user";
  }
  return "unknown";
}

Integrand Integrand::p_power(GrowthParams params) {
  params.validate();
  if (params.mu != 0.0) throw DomainError("p-power integrand requires mu = 0");
  Integrand f;
  f.params_ = params;
  f.kind_ = IntegrandKind::PPower;
  f.autonomous_ = true;
  return f;
}

Integrand Integrand::p_power_regularized(GrowthParams params) {
  params.validate();
  if (!(params.mu > 0.0)) throw DomainError("p-power-regularized integrand requires mu > 0");
  Integrand f;
  f.params_ = params;
  f.kind_ = IntegrandKind::PPowerRegularized;
  f.autonomous_ = true;
  return f;
}

Integrand Integrand::double_phase(GrowthParams params, Coefficient a) {
  params.validate();
  Integrand f;
  f.params_ = params;
  f.kind_ = IntegrandKind::DoublePhase;
  f.autonomous_ = a.is_constant();
  f.a_ = std::move(a);
  return f;
}

Integrand Integrand::holder_modulated(GrowthParams params, Coefficient a) {
  params.validate();
  Integrand f;
  f.params_ = params;
  f.kind_ = IntegrandKind::HolderModulated;
  f.autonomous_ = a.is_constant();
  f.a_ = std::move(a);
  return f;
}

Integrand Integrand::user(GrowthParams params, UserDensity density, UserGradient gradient,
                          bool autonomous) {
  params.validate();
  Integrand f;
  f.params_ = params;
  f.kind_ = IntegrandKind::User;
  f.autonomous_ = autonomous;
  f.user_density_ = std::move(density);
  f.user_gradient_ = std::move(gradient);
  return f;
}

void Integrand::coefficients_at(const Point& x, double& A, double& B) const {
  switch (kind_) {
    case IntegrandKind::PPower:
    case IntegrandKind::PPowerRegularized:
      A = 1.0;
      B = 0.0;
      return;
    case IntegrandKind::DoublePhase:
      A = 1.0;
      B = a_(x);
      return;
    case IntegrandKind::HolderModulated:
      A = 1.0 + a_(x);
      B = 0.0;
      return;
    case IntegrandKind::User:
      break;
  }
  A = B = 0.0;
}

std::optional<std::array<double, 2>> Integrand::radial_coefficients(const Point& x) const {
  if (kind_ == IntegrandKind::User) return std::nullopt;
  double A = 0.0, B = 0.0;
  coefficients_at(x, A, B);
  return std::array<double, 2>{A, B};
}

double Integrand::eval(const Point& x, const Matrix& z) const {
  require_finite(z);
  if (kind_ == IntegrandKind::User) return user_density_(x, z);
  double A = 0.0, B = 0.0;
  coefficients_at(x, A, B);
  const double base = params_.mu * params_.mu + z.norm2();
  double value = A * power(base, 0.5 * params_.p);
  if (B != 0.0) value += B * power(base, 0.5 * params_.q);
  return value;
}

void Integrand::grad_z(const Point& x, const Matrix& z, Matrix& out) const {
  eval_with_grad(x, z, out);
}

Matrix Integrand::grad_z(const Point& x, const Matrix& z) const {
  Matrix out(z.rows(), z.cols());
  eval_with_grad(x, z, out);
  return out;
}

double Integrand::eval_with_grad(const Point& x, const Matrix& z, Matrix& out) const {
  require_finite(z);
  if (out.rows() != z.rows() || out.cols() != z.cols()) out.resize(z.rows(), z.cols());
  if (kind_ == IntegrandKind::User) {
    user_gradient_(x, z, out);
    return user_density_(x, z);
  }
  double A = 0.0, B = 0.0;
  coefficients_at(x, A, B);
  const double p = params_.p;
  const double q = params_.q;
  const double base = params_.mu * params_.mu + z.norm2();
  // |z|^{p-2} z -> 0 as z -> 0 for p > 2, so power(0, positive) = 0 gives the
  // continuous extension.
  const double wp = power(base, 0.5 * p - 1.0);
  double value = A * wp * base;
  double factor = A * p * wp;
  if (B != 0.0) {
    const double wq = power(base, 0.5 * q - 1.0);
    value += B * wq * base;
    factor += B * q * wq;
  }
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = factor * z[k];
  return value;
}

ConvexityReport check_h1_convexity(const Integrand& f, const SampleSpace& space, int samples,
                                   double radius, std::uint64_t seed) {
  if (samples < 1) throw DomainError("check_h1_convexity needs at least one sample");
  const GrowthParams& gp = f.params();
  auto rng = make_rng(seed);
  ConvexityReport report;
  report.worst_gap = -std::numeric_limits<double>::infinity();
  auto G = [&](const Point& x, const Matrix& z) {
    return f.eval(x, z) - gp.lambda * reference_power(gp, z);
  };
  Matrix mid(space.rows, space.cols);
  for (int s = 0; s < samples; ++s) {
    const Point x = random_point(space.domain, rng);
    const Matrix z1 = random_matrix(space.rows, space.cols, radius, rng);
    const Matrix z2 = random_matrix(space.rows, space.cols, radius, rng);
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (z1[k] + z2[k]);
    const double g1 = G(x, z1);
    const double g2 = G(x, z2);
    const double gm = G(x, mid);
    const double gap = gm - 0.5 * (g1 + g2);
    const double scale =
        std::max({1.0, std::abs(f.eval(x, z1)), std::abs(f.eval(x, z2)), std::abs(g1),
                  std::abs(g2)});
    report.worst_gap = std::max(report.worst_gap, gap);
    if (gap > 1e-10 * scale) ++report.violations;
  }
  return report;
}

HolderReport check_h3_holder(const Integrand& f, const SampleSpace& space, int samples,
                             double radius, std::uint64_t seed) {
  HolderReport report;
  if (f.autonomous()) return report;
  const GrowthParams& gp = f.params();
  if (!gp.alpha) throw DomainError("check_h3_holder needs a declared Hoelder exponent alpha");
  report.applicable = true;
  const double alpha = *gp.alpha;
  const Box& box = space.domain;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double diam = box.diameter();
  for (int s = 0; s < samples; ++s) {
    const Point x = random_point(box, rng);
    Point y{0.0, 0.0};
    if (s % 2 == 0) {
      y = random_point(box, rng);
    } else {
      // Nearby partner at log-uniform distance: probes the small-|x-y| regime.
      const double r = diam * std::pow(10.0, -6.0 * unit(rng));
      std::normal_distribution<double> normal(0.0, 1.0);
      Point dir{normal(rng), box.n == 2 ? normal(rng) : 0.0};
      const double len = std::max(distance(dir, Point{0.0, 0.0}, box.n), 1e-300);
      for (int a = 0; a < box.n; ++a) {
        y[a] = std::clamp(x[a] + r * dir[a] / len, box.lo[a], box.hi[a]);
      }
    }
    const double dxy = distance(x, y, box.n);
    if (dxy == 0.0) continue;
    const Matrix z = random_matrix(space.rows, space.cols, radius, rng);
    const double num = std::abs(f.eval(x, z) - f.eval(y, z));
    const double den = gp.Lambda * std::pow(dxy, alpha) * std::pow(1.0 + z.norm2(), 0.5 * gp.q);
    report.max_ratio = std::max(report.max_ratio, num / den);
  }
  report.pass = report.max_ratio <= 1.0 + 1e-9;
  return report;
}

H6Report check_h6(const Integrand& f, const SampleSpace& space, double eps0, int x_samples,
                  int z_samples, std::uint64_t seed, double z_radius) {
  H6Report report;
  if (f.autonomous()) return report;
  const Box& box = space.domain;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Matrix> zs;
  zs.reserve(static_cast<std::size_t>(z_samples) + 1);
  zs.emplace_back(space.rows, space.cols);  // z = 0
  for (int k = 0; k < z_samples; ++k) {
    // Log-spread norms so that both the p- and q-phases dominate somewhere.
    const double norm = z_radius * std::pow(10.0, -2.0 * unit(rng));
    zs.push_back(random_matrix_with_norm(space.rows, space.cols, norm, rng));
  }

  constexpr int kLattice = 9;
  constexpr int kRandom = 24;
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < x_samples; ++s) {
    const Point x = random_point(box, rng);
    const double eps = eps0 * (1.0 - unit(rng));  // in (0, eps0]

    // Candidate set: lattice over the bounding square of the ball plus random
    // points, all restricted to the closed ball intersected with the box.
    std::vector<Point> pts;
    const int ly = box.n == 2 ? kLattice : 1;
    for (int j = 0; j < ly; ++j) {
      for (int i = 0; i < kLattice; ++i) {
        Point y = x;
        y[0] = x[0] - eps + 2.0 * eps * i / (kLattice - 1);
        if (box.n == 2) y[1] = x[1] - eps + 2.0 * eps * j / (kLattice - 1);
        for (int a = 0; a < box.n; ++a) y[a] = std::clamp(y[a], box.lo[a], box.hi[a]);
        if (distance(x, y, box.n) <= eps) pts.push_back(y);
      }
    }
    for (int k = 0; k < kRandom; ++k) {
      Point y = x;
      for (int a = 0; a < box.n; ++a) {
        y[a] = std::clamp(x[a] + eps * (2.0 * unit(rng) - 1.0), box.lo[a], box.hi[a]);
      }
      if (distance(x, y, box.n) <= eps) pts.push_back(y);
    }

    // values[i][k] = F(pts[i], zs[k]); min over points per z.
    std::vector<double> minimum(zs.size(), std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> values(pts.size(), std::vector<double>(zs.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < zs.size(); ++k) {
        values[i][k] = f.eval(pts[i], zs[k]);
        minimum[k] = std::min(minimum[k], values[i][k]);
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double excess = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < zs.size(); ++k) {
        const double tol = 1e-12 * std::max(1.0, std::abs(minimum[k]));
        excess = std::max(excess, values[i][k] - minimum[k] - tol);
      }
      best = std::min(best, excess);
    }
    if (best > report.worst_excess) {
      report.worst_excess = best;
      report.worst_point = x;
      report.worst_radius = eps;
    }
    if (best > 0.0) report.holds = false;
  }
  return report;
}

double fit_monotonicity_constant(const Integrand& f, const SampleSpace& space, int samples,
                                 double radius, std::uint64_t seed) {
  const GrowthParams& gp = f.params();
  auto rng = make_rng(seed);
  double c = std::numeric_limits<double>::infinity();
  Matrix gw(space.rows, space.cols);
  for (int s = 0; s < samples; ++s) {
    const Point x = random_point(space.domain, rng);
    const Matrix z = random_matrix(space.rows, space.cols, radius, rng);
    const Matrix w = random_matrix(space.rows, space.cols, radius, rng);
    const double fw = f.eval_with_grad(x, w, gw);
    double inner = 0.0, diff2 = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      inner += gw[k] * (z[k] - w[k]);
      diff2 += (z[k] - w[k]) * (z[k] - w[k]);
    }
    const double lhs = f.eval(x, z) - fw - inner;
    const double weight =
        std::pow(gp.mu * gp.mu + z.norm2() + w.norm2(), 0.5 * (gp.p - 2.0)) * diff2;
    if (weight > 1e-12) c = std::min(c, lhs / weight);
  }
  return c;
}

GrowthReport check_growth(const Integrand& f, const SampleSpace& space, int samples,
                          double radius, std::uint64_t seed) {
  const GrowthParams& gp = f.params();
  auto rng = make_rng(seed);
  GrowthReport report;
  for (int s = 0; s < samples; ++s) {
    const Point x = random_point(space.domain, rng);
    const Matrix z = random_matrix(space.rows, space.cols, radius, rng);
    const double v = f.eval(x, z);
    report.lower_constant = std::max(report.lower_constant, gp.lambda * reference_power(gp, z) - v);
    const double upper = gp.Lambda * (1.0 + std::pow(z.norm(), gp.q));
    report.upper_ratio = std::max(report.upper_ratio, v / upper);
  }
  report.upper_ok = report.upper_ratio <= 1.0 + 1e-12;
  return report;
}

}  // namespace pqobs
