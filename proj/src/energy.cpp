#include "pqobs/energy.hpp"

#include <cmath>
#include <sstream>

#include "pqobs/errors.hpp"
#include "pqobs/penalty.hpp"
#include "pqobs/summation.hpp"

namespace pqobs {

ObstacleProblem::ObstacleProblem(Integrand integrand, Field psi, Field g)
    : integrand_(std::move(integrand)), psi_(std::move(psi)), g_(std::move(g)) {
  if (!psi_.same_shape(g_)) throw ShapeError("obstacle and boundary datum live on different grids");
  const Grid& grid = psi_.grid();
  for (int k = 0; k < grid.node_count(); ++k) {
    if (!grid.is_boundary(k)) continue;
    for (int r = 0; r < psi_.components(); ++r) {
      const double gap = g_(k, r) - psi_(k, r);
      if (gap < -1e-12 * std::max(1.0, std::abs(psi_(k, r)))) {
        std::ostringstream msg;
        msg << "boundary datum below the obstacle at node " << k << " (g - psi = " << gap << ")";
        throw PreconditionError(msg.str());
      }
    }
  }
}

void check_dirichlet(const ObstacleProblem& problem, const Field& u) {
  if (!u.same_shape(problem.g())) throw ShapeError("field does not live on the problem grid");
  const Grid& grid = problem.grid();
  for (int k = 0; k < grid.node_count(); ++k) {
    if (!grid.is_boundary(k)) continue;
    for (int r = 0; r < u.components(); ++r) {
      const double gk = problem.g()(k, r);
      if (std::abs(u(k, r) - gk) > 1e-12 * std::max(1.0, std::abs(gk))) {
        std::ostringstream msg;
        msg << "field violates the Dirichlet datum at boundary node " << k;
        throw PreconditionError(msg.str());
      }
    }
  }
}

namespace {

// Shared assembly; grad may be null.
EnergyBreakdown assemble(const ObstacleProblem& problem, const Field& u, const EnergyParams& params,
                         Field* grad) {
  check_dirichlet(problem, u);
  const Grid& grid = problem.grid();
  const Integrand& f = problem.integrand();
  const int N = u.components();
  const int n = grid.dim();
  const double q = f.params().q;
  const double meas = grid.element_measure();
  const double eps = params.epsilon;
  const bool autonomous = f.autonomous();

  if (grad) {
    if (!grad->same_shape(u)) *grad = Field(grid, N);
    std::fill(grad->values().begin(), grad->values().end(), 0.0);
  }

  CompensatedSum bulk, reg;
  Matrix z(N, n), gz(N, n);
  const double ihx = 1.0 / grid.h(0);
  const double ihy = n == 2 ? 1.0 / grid.h(1) : 0.0;
  for (int e = 0; e < grid.element_count(); ++e) {
    element_gradient(u, e, z);
    const Point xc = autonomous ? Point{} : grid.element_centroid(e);
    double fe = 0.0;
    if (grad) {
      fe = f.eval_with_grad(xc, z, gz);
    } else {
      fe = f.eval(xc, z);
    }
    bulk.add(meas * fe);
    if (eps != 0.0) {
      const double s = z.norm2();
      double zq = 0.0, factor = 0.0;
      if (q == 2.0) {
        zq = s;
        factor = 2.0;
      } else if (s > 0.0) {
        const double w = std::pow(s, 0.5 * q - 1.0);
        zq = w * s;
        factor = q * w;
      }
      reg.add(meas * eps * zq);
      if (grad) {
        for (std::size_t c = 0; c < z.size(); ++c) gz[c] += eps * factor * z[c];
      }
    }
    if (!grad) continue;
    // Contract meas * G against the gradients of the hat functions.
    const auto v = grid.element_nodes(e);
    Field& G = *grad;
    if (n == 1) {
      for (int r = 0; r < N; ++r) {
        const double gx = meas * gz(r, 0) * ihx;
        G(v[0], r) -= gx;
        G(v[1], r) += gx;
      }
    } else if (e % 2 == 0) {
      for (int r = 0; r < N; ++r) {
        const double gx = meas * gz(r, 0) * ihx;
        const double gy = meas * gz(r, 1) * ihy;
        G(v[0], r) -= gx;
        G(v[1], r) += gx - gy;
        G(v[2], r) += gy;
      }
    } else {
      for (int r = 0; r < N; ++r) {
        const double gx = meas * gz(r, 0) * ihx;
        const double gy = meas * gz(r, 1) * ihy;
        G(v[0], r) -= gy;
        G(v[1], r) += gx;
        G(v[2], r) += gy - gx;
      }
    }
  }

  EnergyBreakdown out;
  out.bulk = bulk.value();
  out.regularization = reg.value();
  if (params.kappa != 0.0) {
    const Field& psi = problem.psi();
    const auto& w = grid.lumped_weights();
    CompensatedSum pen;
    for (int k = 0; k < grid.node_count(); ++k) {
      const double wk = w[static_cast<std::size_t>(k)];
      for (int r = 0; r < N; ++r) {
        const double x = psi(k, r) - u(k, r);
        const double inner = h_delta(x, params.delta);
        pen.add(wk * h_delta(inner, params.delta));
        if (grad) {
          (*grad)(k, r) -= params.kappa * wk * h_delta_prime(inner, params.delta) *
                           h_delta_prime(x, params.delta);
        }
      }
    }
    out.penalty = params.kappa * pen.value();
  }
  if (grad) {
    for (int k = 0; k < grid.node_count(); ++k) {
      if (!grid.is_boundary(k)) continue;
      for (int r = 0; r < N; ++r) (*grad)(k, r) = 0.0;
    }
  }
  CompensatedSum total;
  total.add(out.bulk);
  total.add(out.regularization);
  total.add(out.penalty);
  out.total = total.value();
  return out;
}

// (b + db)^e - b^e without cancellation, b >= 0, b + db >= 0.
double power_difference(double b, double db, double e) {
  if (db == 0.0) return 0.0;
  if (e == 1.0) return db;
  if (b == 0.0) return std::pow(db, e);
  return std::pow(b, e) * std::expm1(e * std::log1p(db / b));
}

// H_d(x + dx) - H_d(x) = d log1p(sigma(x/d) expm1(dx/d)).
double softplus_difference(double x, double dx, double delta) {
  if (dx == 0.0) return 0.0;
  return delta * std::log1p(h_delta_prime(x, delta) * std::expm1(dx / delta));
}

}  // namespace

double energy_difference(const ObstacleProblem& problem, const Field& u, const Field& du,
                         const EnergyParams& params) {
  if (!u.same_shape(du) || !u.same_shape(problem.g())) throw ShapeError("energy_difference: shape mismatch");
  const Grid& grid = problem.grid();
  const Integrand& f = problem.integrand();
  const GrowthParams& gp = f.params();
  const int N = u.components();
  const int n = grid.dim();
  const double meas = grid.element_measure();
  const bool autonomous = f.autonomous();

  CompensatedSum sum;
  Matrix z(N, n), dz(N, n), znew(N, n);
  for (int e = 0; e < grid.element_count(); ++e) {
    element_gradient(du, e, dz);
    if (dz.norm2() == 0.0) continue;
    element_gradient(u, e, z);
    double ds = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) ds += (2.0 * z[c] + dz[c]) * dz[c];
    const double s = z.norm2();
    const Point xc = autonomous ? Point{} : grid.element_centroid(e);
    double local = 0.0;
    if (const auto ab = f.radial_coefficients(xc)) {
      const double b = gp.mu * gp.mu + s;
      local = (*ab)[0] * power_difference(b, ds, 0.5 * gp.p);
      if ((*ab)[1] != 0.0) local += (*ab)[1] * power_difference(b, ds, 0.5 * gp.q);
    } else {
      for (std::size_t c = 0; c < z.size(); ++c) znew[c] = z[c] + dz[c];
      local = f.eval(xc, znew) - f.eval(xc, z);
    }
    if (params.epsilon != 0.0) local += params.epsilon * power_difference(s, ds, 0.5 * gp.q);
    sum.add(meas * local);
  }
  if (params.kappa != 0.0) {
    const Field& psi = problem.psi();
    const auto& w = grid.lumped_weights();
    CompensatedSum pen;
    for (int k = 0; k < grid.node_count(); ++k) {
      for (int r = 0; r < N; ++r) {
        const double step = du(k, r);
        if (step == 0.0) continue;
        const double x = psi(k, r) - u(k, r);
        const double inner = h_delta(x, params.delta);
        const double dinner = softplus_difference(x, -step, params.delta);
        pen.add(w[static_cast<std::size_t>(k)] * softplus_difference(inner, dinner, params.delta));
      }
    }
    sum.add(params.kappa * pen.value());
  }
  return sum.value();
}

EnergyBreakdown energy_breakdown(const ObstacleProblem& problem, const Field& u,
                                 const EnergyParams& params) {
  return assemble(problem, u, params, nullptr);
}

double integrate_energy(const ObstacleProblem& problem, const Field& u, const EnergyParams& params) {
  return assemble(problem, u, params, nullptr).total;
}

double energy_and_gradient(const ObstacleProblem& problem, const Field& u,
                           const EnergyParams& params, Field& grad) {
  return assemble(problem, u, params, &grad).total;
}

}  // namespace pqobs
