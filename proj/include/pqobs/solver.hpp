#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqobs/energy.hpp"
#include "pqobs/penalty.hpp"
#include "pqobs/problem.hpp"

namespace pqobs {

enum class Method { GradientDescent, Lbfgs };

std::string to_string(Method method);
Method parse_method(const std::string& name);

/// One continuation step (epsilon_k, delta_k).
struct Rung {
  double epsilon = 0.0;
  double delta = 0.1;
};

/// (1e-1,1e-1), (1e-2,1e-2), (1e-3,1e-3), (1e-4,1e-4).
std::vector<Rung> default_ladder();

struct SolveConfig {
  double epsilon = 0.0;
  PenaltyParams penalty;
  std::vector<Rung> ladder = default_ladder();
  /// Stop when the Euclidean norm of the free-node gradient drops below this.
  double grad_tol = 1e-8;
  /// Stop when |E_k - E_{k+1}| <= energy_tol * max(1, |E_{k+1}|); 0 disables.
  double energy_tol = 1e-15;
  int max_iters = 50000;
  double ls_shrink = 0.5;
  double ls_slope = 1e-4;
  Method method = Method::Lbfgs;
  int lbfgs_memory = 10;
  /// Assembly is serial with a fixed summation order, so runs are always
  /// reproducible; the flag is carried for provenance.
  bool deterministic = true;

  /// Throws DomainError on non-positive tolerances, a bad line-search setup,
  /// or an empty or non-monotone ladder.
  void validate() const;
};

struct IterationRecord {
  double energy = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct RungRecord {
  int rung = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 0.0;
  double energy = 0.0;
  double violation = 0.0;
  double w1q_norm = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolveResult {
  Field u;
  std::vector<IterationRecord> history;
  std::vector<RungRecord> ladder_trace;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double kappa = 0.0;
  double kappa0 = 0.0;
};

/// Line search could not decrease the energy. Carries the best iterate.
class StagnationError : public std::runtime_error {
 public:
  StagnationError(const std::string& what, SolveResult best, int rung = -1)
      : std::runtime_error(what), best_(std::move(best)), rung_(rung) {}
  const SolveResult& best() const { return best_; }
  int rung() const { return rung_; }

 private:
  SolveResult best_;
  int rung_;
};

/// Energy parameters of a single minimisation: epsilon and delta from the
/// config, kappa resolved (auto = safety * kappa0(epsilon)).
EnergyParams energy_params(const ObstacleProblem& problem, const SolveConfig& config);

double integrate_energy(const ObstacleProblem& problem, const Field& u, const SolveConfig& config);

/// Exact gradient of the discrete energy with respect to the free nodal
/// values; boundary entries are zero.
Field assemble_gradient(const ObstacleProblem& problem, const Field& u, const EnergyParams& params);

/// Euclidean norm of a nodal vector.
double euclidean_norm(const Field& v);

/// Gradient descent (Barzilai-Borwein initial steps) or L-BFGS, both with
/// Armijo backtracking. Every accepted step strictly decreases the energy.
SolveResult minimize(const ObstacleProblem& problem, const SolveConfig& config, const Field& initial);

/// Warm-started minimisations along config.ladder with kappa fixed across
/// rungs; auto kappa uses kappa0 evaluated at the largest epsilon.
SolveResult solve_ladder(const ObstacleProblem& problem, const SolveConfig& config,
                         const std::optional<Field>& initial = std::nullopt);

/// Spectral projected gradient on the unpenalised energy (kappa = 0,
/// epsilon = config.epsilon) with iterates clamped nodally to u >= psi.
/// Barzilai-Borwein steps with a nonmonotone Armijo test against the largest
/// of the last 10 energies. Stops on the norm of P(u - grad) - u.
SolveResult projected_gradient_oracle(const ObstacleProblem& problem, const SolveConfig& config,
                                      const std::optional<Field>& initial = std::nullopt);

}  // namespace pqobs
