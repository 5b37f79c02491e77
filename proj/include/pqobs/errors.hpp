#pragma once

#include <stdexcept>
#include <string>

namespace pqobs {

/// Argument outside the mathematical domain of an operation (non-finite
/// input, t < 1, delta <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fields, grids or matrices whose shapes do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grid too coarse for the requested stencil.
class ResolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation at a point where the integrand gradient is singular.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A documented precondition of an operation does not hold (Dirichlet data,
/// feasibility, obstacle compatibility on the boundary).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pqobs
