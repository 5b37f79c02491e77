#pragma once

#include <optional>

#include "pqobs/grid.hpp"
#include "pqobs/problem.hpp"

namespace pqobs {

/// Smoothed positive part H_d(x) = d ln(1 + e^{x/d}). Convex, non-negative,
/// non-decreasing, 0 <= H_d' <= 1 and |H_d(x) - max(0,x)| <= d ln 2.
/// Throws DomainError if delta <= 0.
double h_delta(double x, double delta);
/// H_d'(x) = 1 / (1 + e^{-x/d}).
double h_delta_prime(double x, double delta);

struct PenaltyParams {
  /// Penalty weight; empty means "auto" = safety * kappa0.
  std::optional<double> kappa;
  double delta = 0.1;
  double safety = 2.0;
  /// Threshold computed for the problem at hand (filled in by the solver).
  double kappa0 = 0.0;

  /// Throws DomainError unless 0 < delta <= 1, safety >= 1 and kappa >= 0.
  void validate() const;
  double resolved_kappa() const { return kappa ? *kappa : safety * kappa0; }
};

/// sum_k w_k sum_i H_d(H_d(psi_i - u_i)) with mass-lumped weights w_k.
double smoothed_penalty(const Field& u, const Field& psi, double delta);
/// Gradient of smoothed_penalty with respect to the nodal values of u:
///   -w_k H_d'(H_d(psi_i - u_i)) H_d'(psi_i - u_i).
Field smoothed_penalty_gradient(const Field& u, const Field& psi, double delta);

/// The unsmoothed L^1 penalty sum_k w_k sum_i (psi_i - u_i)_+.
double exact_penalty(const Field& u, const Field& psi);

/// max over nodes and rows of (psi_i - u_i)_+.
double max_violation(const Field& u, const Field& psi);

/// Exactness threshold kappa0 = || div d_z F_eps(D psi) ||_inf, where
/// F_eps = F + eps |z|^q. D psi and the divergence use central differences
/// in the interior and second-order one-sided differences on boundary nodes.
/// Throws ResolutionError when an axis has fewer than 3 nodes.
double compute_kappa0(const ObstacleProblem& problem, double epsilon = 0.0);

}  // namespace pqobs
