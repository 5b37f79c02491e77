#include "pqobs/penalty.hpp"

#include <algorithm>
#include <cmath>

#include "pqobs/errors.hpp"
#include "pqobs/summation.hpp"

namespace pqobs {

namespace {

void require_delta(double delta) {
  if (!(delta > 0.0)) throw DomainError("smoothing parameter delta must be > 0");
}

void require_same_shape(const Field& u, const Field& psi) {
  if (!u.same_shape(psi)) throw ShapeError("penalty: u and psi live on different grids or shapes");
}

// Derivative along one axis at node (i,j) of a nodal scalar given by `at`:
// central in the interior, second-order one-sided at the ends.
template <class At>
double axis_derivative(const Grid& g, int axis, int i, int j, At&& at) {
  const int m = g.nodes(axis);
  const int c = axis == 0 ? i : j;
  auto value = [&](int s) { return axis == 0 ? at(s, j) : at(i, s); };
  const double h = g.h(axis);
  if (c == 0) return (-3.0 * value(0) + 4.0 * value(1) - value(2)) / (2.0 * h);
  if (c == m - 1) return (3.0 * value(m - 1) - 4.0 * value(m - 2) + value(m - 3)) / (2.0 * h);
  return (value(c + 1) - value(c - 1)) / (2.0 * h);
}

}  // namespace

double h_delta(double x, double delta) {
  require_delta(delta);
  const double t = x / delta;
  if (t > 30.0) return x + delta * std::log1p(std::exp(-t));
  return delta * std::log1p(std::exp(t));
}

double h_delta_prime(double x, double delta) {
  require_delta(delta);
  const double t = x / delta;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void PenaltyParams::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("penalty.delta must lie in (0, 1]");
  if (!(safety >= 1.0)) throw DomainError("penalty.safety must be >= 1");
  if (kappa && !(*kappa >= 0.0)) throw DomainError("penalty.kappa must be >= 0");
}

double smoothed_penalty(const Field& u, const Field& psi, double delta) {
  require_delta(delta);
  require_same_shape(u, psi);
  const auto& w = u.grid().lumped_weights();
  CompensatedSum sum;
  for (int k = 0; k < u.grid().node_count(); ++k) {
    double local = 0.0;
    for (int r = 0; r < u.components(); ++r) local += h_delta(h_delta(psi(k, r) - u(k, r), delta), delta);
    sum.add(w[static_cast<std::size_t>(k)] * local);
  }
  return sum.value();
}

Field smoothed_penalty_gradient(const Field& u, const Field& psi, double delta) {
  require_delta(delta);
  require_same_shape(u, psi);
  const auto& w = u.grid().lumped_weights();
  Field grad(u.grid(), u.components());
  for (int k = 0; k < u.grid().node_count(); ++k) {
    for (int r = 0; r < u.components(); ++r) {
      const double x = psi(k, r) - u(k, r);
      grad(k, r) = -w[static_cast<std::size_t>(k)] * h_delta_prime(h_delta(x, delta), delta) *
                   h_delta_prime(x, delta);
    }
  }
  return grad;
}

double exact_penalty(const Field& u, const Field& psi) {
  require_same_shape(u, psi);
  const auto& w = u.grid().lumped_weights();
  CompensatedSum sum;
  for (int k = 0; k < u.grid().node_count(); ++k) {
    for (int r = 0; r < u.components(); ++r) {
      sum.add(w[static_cast<std::size_t>(k)] * std::max(0.0, psi(k, r) - u(k, r)));
    }
  }
  return sum.value();
}

double max_violation(const Field& u, const Field& psi) {
  require_same_shape(u, psi);
  double worst = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) worst = std::max(worst, psi.values()[k] - u.values()[k]);
  return worst;
}

double compute_kappa0(const ObstacleProblem& problem, double epsilon) {
  const Grid& g = problem.grid();
  const int n = g.dim();
  for (int a = 0; a < n; ++a) {
    if (g.nodes(a) < 3) throw ResolutionError("kappa0 needs at least 3 nodes per axis");
  }
  const Field& psi = problem.psi();
  const int N = psi.components();
  const int count = g.node_count();
  const double q = problem.integrand().params().q;

  // flux(k) = d_z F(x_k, D psi(x_k)) + eps q |D psi|^{q-2} D psi, stored N x n per node.
  std::vector<double> flux(static_cast<std::size_t>(count * N * n));
  Matrix z(N, n), gz(N, n);
  for (int k = 0; k < count; ++k) {
    const int i = g.ix(k);
    const int j = g.iy(k);
    for (int r = 0; r < N; ++r) {
      for (int a = 0; a < n; ++a) {
        z(r, a) = axis_derivative(g, a, i, j, [&](int ii, int jj) { return psi(g.index(ii, jj), r); });
      }
    }
    problem.integrand().grad_z(g.node_point(k), z, gz);
    if (epsilon != 0.0) {
      const double s = z.norm2();
      const double factor = epsilon * q * (s == 0.0 ? (q == 2.0 ? 1.0 : 0.0) : std::pow(s, 0.5 * q - 1.0));
      for (std::size_t c = 0; c < z.size(); ++c) gz[c] += factor * z[c];
    }
    for (std::size_t c = 0; c < gz.size(); ++c) flux[static_cast<std::size_t>(k) * gz.size() + c] = gz[c];
  }

  double kappa0 = 0.0;
  const std::size_t stride = static_cast<std::size_t>(N * n);
  for (int k = 0; k < count; ++k) {
    const int i = g.ix(k);
    const int j = g.iy(k);
    for (int r = 0; r < N; ++r) {
      double div = 0.0;
      for (int a = 0; a < n; ++a) {
        div += axis_derivative(g, a, i, j, [&](int ii, int jj) {
          return flux[static_cast<std::size_t>(g.index(ii, jj)) * stride + static_cast<std::size_t>(r * n + a)];
        });
      }
      kappa0 = std::max(kappa0, std::abs(div));
    }
  }
  return kappa0;
}

}  // namespace pqobs
