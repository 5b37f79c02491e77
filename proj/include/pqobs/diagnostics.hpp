#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "pqobs/grid.hpp"
#include "pqobs/integrand.hpp"
#include "pqobs/problem.hpp"

namespace pqobs {

// ---------------------------------------------------------------------------
// V-function

/// V_{mu,t}(z) = (mu^2 + |z|^2)^{(t-2)/4} z. Throws DomainError if t <= 1.
Matrix v_function(const Matrix& z, double mu, double t);

/// |V(z1) - V(z2)|^2 / ((mu^2+|z1|^2+|z2|^2)^{(t-2)/2} |z1 - z2|^2).
double v_ratio(const Matrix& z1, const Matrix& z2, double mu, double t);

struct VEquivalenceReport {
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  bool pass = false;  // ratio_max / ratio_min <= 10
};

/// Samples pairs (z1, z2) of shape rows x cols with log-spread magnitudes and
/// returns the extremes of v_ratio.
VEquivalenceReport v_equivalence_check(double mu, double t, int samples, std::uint64_t seed,
                                       int rows = 2, int cols = 2);

/// V_{mu,t} applied element-wise to a gradient field.
ElementField v_of_gradient(const ElementField& du, double mu, double t);

// ---------------------------------------------------------------------------
// Difference-quotient seminorm

/// Grid translation vector, in node steps per axis.
struct Offset {
  int di = 0;
  int dj = 0;
  bool operator<(const Offset& o) const { return di != o.di ? di < o.di : dj < o.dj; }
  bool operator==(const Offset& o) const = default;
};

double offset_length(const Grid& grid, const Offset& h);

/// Axis-aligned and diagonal grid vectors with min_steps * h_grid <= |h| <= max_fraction * diam.
std::vector<Offset> default_offsets(const Grid& grid, int min_steps = 2, double max_fraction = 0.25);

/// (int_{Omega_h} |v(x+h) - v(x)|^t dx)^{1/t}, where Omega_h = {x : x, x+h in Omega}.
/// Nodal fields use the trapezoid rule on the sub-box Omega_h; element fields
/// sum over elements whose translate stays in the grid. Returns nothing when
/// Omega_h is empty.
std::optional<double> difference_norm(const Field& v, const Offset& h, double t);
std::optional<double> difference_norm(const ElementField& v, const Offset& h, double t);

/// sup over offsets of |h|^{-s} difference_norm(v, h, t). Throws DomainError
/// when s is outside (0,1], t < 1, an offset is zero, or every offset was
/// skipped.
double nikolskii_seminorm(const Field& v, double s, double t, const std::vector<Offset>& offsets);
double nikolskii_seminorm(const ElementField& v, double s, double t, const std::vector<Offset>& offsets);

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Radial cutoff functional

struct CutoffReport {
  /// (sigma-rho)^{-t-1/delta} (int_rho^sigma b^delta dr)^{1/delta}.
  double J_bound = 0.0;
  /// int (|phi'| + |phi'|^t) b dr for the harmonic-weight profile, evaluated
  /// with the same quadrature as cutoff_energy.
  double J_optimal = 0.0;
  /// (sigma-rho)/A + int b^{1-t} dr / A^t with A = int b^{-1} dr.
  double J_closed_form = 0.0;
  /// phi(r_k) = 1 - A^{-1} int_rho^{r_k} b^{-1} dr on the sample grid.
  std::vector<double> profile;
};

/// b holds samples of b(r) > 0 on a uniform grid over [rho, sigma]. Throws
/// DomainError unless 0 < rho < sigma, sigma - rho < 1, t > 1,
/// delta in (0,1), at least two samples, and b > 0 everywhere.
CutoffReport cutoff_functional(const std::vector<double>& b, double rho, double sigma, double t,
                               double delta);

/// int (|phi'| + |phi'|^t) b dr for a piecewise-linear phi given by its values
/// on the same uniform grid as b (b averaged per interval).
double cutoff_energy(const std::vector<double>& b, double rho, double sigma, double t,
                     const std::vector<double>& phi);

// ---------------------------------------------------------------------------
// Lavrentiev probe

/// Unit-mass, symmetric tensor cubic B-spline weights along one axis for a
/// mollifier of the given radius (support |x| < radius).
std::vector<double> mollifier_weights(double radius, double h);

/// eta * (u*phi - psi*phi + psi) + (1 - eta) u, with eta = 0 within
/// eta_width/2 of the boundary, 1 beyond eta_width (eta_width = 0: eta = 1).
/// Convolution replicates edge values outside the grid.
Field mollified_competitor(const Field& u, const Field& psi, double eta_width, double radius);

/// Sum over elements of |T| F(x_T, Du), without boundary checks.
double plain_energy(const Integrand& f, const Field& u);

struct LavrentievReport {
  std::vector<double> radii;
  std::vector<double> energies;
  /// min over radii and nodes of u_eps - psi.
  double min_slack = 0.0;
  bool feasible = true;
  double base_energy = 0.0;
  /// max(0, F(u_eps at the smallest radius) - F(u)).
  double gap_estimate = 0.0;
};

/// Throws PreconditionError if u violates the obstacle by more than
/// feasibility_tol, or if a radius is not below eta_width (eta_width > 0), or
/// the radii are not strictly decreasing.
LavrentievReport lavrentiev_probe(const ObstacleProblem& problem, const Field& u, double eta_width,
                                  const std::vector<double>& radii, double feasibility_tol = 1e-3);

// ---------------------------------------------------------------------------
// Gap condition and aggregated report

struct GapCondition {
  double q_max_autonomous = 0.0;                 // min(np/(n-1), p+1)
  std::optional<double> q_max_nonautonomous;    // (n+alpha)p/n when alpha is known
  double applicable_bound = 0.0;
  bool satisfied = false;                        // q < applicable_bound
};

GapCondition gap_check(const GrowthParams& params, int n, bool autonomous);

enum class SeminormTarget { Field, Gradient, VGradient };

struct DiagnosticsOptions {
  std::vector<double> seminorm_s{0.45};
  std::vector<double> seminorm_t{2.0};
  SeminormTarget target = SeminormTarget::VGradient;
  bool lavrentiev = false;
  double eta_width = 0.1;
  std::vector<double> radii;
};

struct DiagnosticsReport {
  double w1q_norm = 0.0;
  double v_l2 = 0.0;
  std::map<std::pair<double, double>, double> nikolskii;  // (s, t) -> value
  double violation = 0.0;
  GapCondition gap_condition;
  std::optional<LavrentievReport> lavrentiev_probe;
};

DiagnosticsReport diagnose(const ObstacleProblem& problem, const Field& u,
                           const DiagnosticsOptions& options);

}  // namespace pqobs
