#pragma once

#include "pqobs/grid.hpp"
#include "pqobs/integrand.hpp"

namespace pqobs {

/// Vectorial obstacle problem: minimise int F(x, Du) over u = g on the
/// boundary with u >= psi row-wise.
class ObstacleProblem {
 public:
  /// Throws ShapeError if psi and g differ in grid or component count, and
  /// PreconditionError unless g >= psi at every boundary node.
  ObstacleProblem(Integrand integrand, Field psi, Field g);

  const Grid& grid() const { return psi_.grid(); }
  const Integrand& integrand() const { return integrand_; }
  int components() const { return psi_.components(); }
  const Field& psi() const { return psi_; }
  const Field& g() const { return g_; }

 private:
  Integrand integrand_;
  Field psi_;
  Field g_;
};

/// Parameters of the discrete regularised, penalised energy
///   sum_T |T| [F(x_T, Du) + epsilon |Du|^q] + kappa sum_k w_k sum_i H_d(H_d(psi_i - u_i)).
/// epsilon = kappa = 0 gives the plain discrete energy.
struct EnergyParams {
  double epsilon = 0.0;
  double kappa = 0.0;
  double delta = 0.1;
};

}  // namespace pqobs
