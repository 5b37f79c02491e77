#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "pqobs/geometry.hpp"

namespace pqobs {

/// Growth metadata of an energy density with (p,q)-growth:
///   lambda (mu^2+|z|^2)^{p/2} - C <= F(x,z) <= Lambda (1+|z|^q).
struct GrowthParams {
  double p = 2.0;
  double q = 2.0;
  double mu = 0.0;
  double lambda = 1.0;
  double Lambda = 1.0;
  /// x-Hoelder exponent; only meaningful for non-autonomous integrands.
  std::optional<double> alpha;

  /// Throws DomainError unless 2 <= p <= q, mu >= 0, lambda, Lambda > 0 and
  /// alpha (if present) lies in (0,1].
  void validate() const;
};

/// Scalar coefficient field a(x) >= 0 used by the double-phase and
/// Hoelder-modulated densities.
class Coefficient {
 public:
  Coefficient() = default;

  static Coefficient constant(double value);
  static Coefficient expression(std::function<double(const Point&)> fn);

  double operator()(const Point& x) const { return is_constant_ ? value_ : fn_(x); }
  bool is_constant() const { return is_constant_; }

 private:
  bool is_constant_ = true;
  double value_ = 0.0;
  std::function<double(const Point&)> fn_;
};

enum class IntegrandKind {
  PPower,             // |z|^p
  PPowerRegularized,  // (mu^2+|z|^2)^{p/2}, mu > 0
  DoublePhase,        // (mu^2+|z|^2)^{p/2} + a(x) (mu^2+|z|^2)^{q/2}
  HolderModulated,    // (1+a(x)) (mu^2+|z|^2)^{p/2}
  User,
};

std::string to_string(IntegrandKind kind);

using UserDensity = std::function<double(const Point&, const Matrix&)>;
using UserGradient = std::function<void(const Point&, const Matrix&, Matrix&)>;

/// Energy density F(x,z) with its z-gradient. Immutable after construction
/// and safe to share between threads.
class Integrand {
 public:
  static Integrand p_power(GrowthParams params);
  static Integrand p_power_regularized(GrowthParams params);
  static Integrand double_phase(GrowthParams params, Coefficient a);
  static Integrand holder_modulated(GrowthParams params, Coefficient a);
  static Integrand user(GrowthParams params, UserDensity density, UserGradient gradient,
                        bool autonomous);

  const GrowthParams& params() const { return params_; }
  IntegrandKind kind() const { return kind_; }
  bool autonomous() const { return autonomous_; }

  /// F(x,z). Throws DomainError for non-finite z.
  double eval(const Point& x, const Matrix& z) const;

  /// d_z F(x,z) written into `out` (resized to the shape of z).
  void grad_z(const Point& x, const Matrix& z, Matrix& out) const;
  Matrix grad_z(const Point& x, const Matrix& z) const;

  /// F(x,z) and d_z F(x,z) in one pass.
  double eval_with_grad(const Point& x, const Matrix& z, Matrix& out) const;

  /// Built-in densities are radial, F = A(x) (mu^2+|z|^2)^{p/2} + B(x) (mu^2+|z|^2)^{q/2};
  /// returns {A(x), B(x)}, or nothing for user densities.
  std::optional<std::array<double, 2>> radial_coefficients(const Point& x) const;

 private:
  Integrand() = default;

  void coefficients_at(const Point& x, double& A, double& B) const;

  GrowthParams params_;
  IntegrandKind kind_ = IntegrandKind::PPower;
  bool autonomous_ = true;
  Coefficient a_;
  UserDensity user_density_;
  UserGradient user_gradient_;
};

/// Shape and region over which the structural samplers draw (x, z).
struct SampleSpace {
  Box domain;
  int rows = 1;  // N
  int cols = 2;  // n
};

struct ConvexityReport {
  int violations = 0;
  /// Largest value of G(mid) - (G(z1)+G(z2))/2 seen (positive = violation).
  double worst_gap = 0.0;
};

/// Midpoint convexity of G(z) = F(x,z) - lambda (mu^2+|z|^2)^{p/2} on random
/// triples with |z| <= radius.
ConvexityReport check_h1_convexity(const Integrand& f, const SampleSpace& space, int samples,
                                   double radius, std::uint64_t seed);

struct HolderReport {
  bool applicable = false;
  double max_ratio = 0.0;
  bool pass = false;
};

/// max |F(x,z)-F(y,z)| / (Lambda |x-y|^alpha (1+|z|^2)^{q/2}) over samples.
/// Not applicable for autonomous integrands.
HolderReport check_h3_holder(const Integrand& f, const SampleSpace& space, int samples,
                             double radius, std::uint64_t seed);

struct H6Report {
  bool holds = true;
  Point worst_point{0.0, 0.0};
  double worst_radius = 0.0;
  /// Smallest achievable max_{y,z} (F(yhat,z) - F(y,z)) at the worst point;
  /// positive means no candidate yhat works there.
  double worst_excess = 0.0;
};

/// Sampling test of the minimal-point condition: for sampled x and
/// eps in (0, eps0) look for yhat in the closed ball intersection with
/// F(yhat,z) <= F(y,z) for all sampled y and z.
H6Report check_h6(const Integrand& f, const SampleSpace& space, double eps0, int x_samples,
                  int z_samples, std::uint64_t seed, double z_radius = 4.0);

/// Best constant c in
///   F(z) - F(w) - <d_z F(w), z-w> >= c (mu^2+|z|^2+|w|^2)^{(p-2)/2} |z-w|^2
/// over random samples.
double fit_monotonicity_constant(const Integrand& f, const SampleSpace& space, int samples,
                                 double radius, std::uint64_t seed);

struct GrowthReport {
  /// Smallest C with lambda (mu^2+|z|^2)^{p/2} - C <= F(x,z) on the sample.
  double lower_constant = 0.0;
  /// max F(x,z) / (Lambda (1+|z|^q)) on the sample.
  double upper_ratio = 0.0;
  bool upper_ok = false;
};

GrowthReport check_growth(const Integrand& f, const SampleSpace& space, int samples,
                          double radius, std::uint64_t seed);

}  // namespace pqobs
