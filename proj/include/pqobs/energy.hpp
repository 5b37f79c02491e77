#pragma once

#include "pqobs/grid.hpp"
#include "pqobs/problem.hpp"

namespace pqobs {

struct EnergyBreakdown {
  double bulk = 0.0;            // sum_T |T| F(x_T, Du)
  double regularization = 0.0;  // sum_T |T| epsilon |Du|^q
  double penalty = 0.0;         // kappa * smoothed penalty
  double total = 0.0;
};

/// Discrete F_{eps,delta}(u): centroid quadrature for the gradient terms and
/// mass-lumped quadrature for the penalty. Throws ShapeError if u does not
/// live on the problem grid and PreconditionError if u differs from g on a
/// boundary node.
EnergyBreakdown energy_breakdown(const ObstacleProblem& problem, const Field& u,
                                 const EnergyParams& params);
double integrate_energy(const ObstacleProblem& problem, const Field& u, const EnergyParams& params);

/// Energy together with its exact gradient with respect to the nodal values;
/// boundary entries of `grad` are set to zero.
double energy_and_gradient(const ObstacleProblem& problem, const Field& u,
                           const EnergyParams& params, Field& grad);

/// E(u + du) - E(u) evaluated element by element in cancellation-free form
/// (expm1/log1p for the power and softplus terms), accurate relative to the
/// difference itself rather than to E(u). du must vanish on boundary nodes.
double energy_difference(const ObstacleProblem& problem, const Field& u, const Field& du,
                         const EnergyParams& params);

/// Throws PreconditionError unless u coincides with g on boundary nodes.
void check_dirichlet(const ObstacleProblem& problem, const Field& u);

}  // namespace pqobs
