#include "pqobs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "pqobs/errors.hpp"

namespace pqobs {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

// axpy into a fresh vector: out = x + alpha * d.
void step_to(const Vec& x, double alpha, const Vec& d, Vec& out) {
  out.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + alpha * d[k];
}

struct CurvaturePair {
  Vec s, y;
  double rho;
};

// Two-loop recursion: returns -H g.
Vec lbfgs_direction(const Vec& g, const std::deque<CurvaturePair>& memory) {
  Vec q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    const auto& m = memory[i];
    alpha[i] = m.rho * dot(m.s, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * m.y[k];
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto& m = memory[i];
    const double beta = m.rho * dot(m.y, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * m.s[k];
  }
  for (double& v : q) v = -v;
  return q;
}

bool energy_converged(double before, double after, double tol) {
  return tol > 0.0 && std::abs(before - after) <= tol * std::max(1.0, std::abs(after));
}

RungRecord make_record(const ObstacleProblem& problem, const SolveResult& r, const EnergyParams& params,
                       int rung) {
  RungRecord rec;
  rec.rung = rung;
  rec.epsilon = params.epsilon;
  rec.delta = params.delta;
  rec.kappa = params.kappa;
  rec.energy = r.history.empty() ? integrate_energy(problem, r.u, params) : r.history.back().energy;
  rec.violation = max_violation(r.u, problem.psi());
  rec.w1q_norm = w1q_norm(r.u, problem.integrand().params().q);
  rec.grad_norm = r.grad_norm;
  rec.iterations = r.iterations;
  rec.converged = r.converged;
  return rec;
}

}  // namespace

std::string to_string(Method method) { return method == Method::Lbfgs ? "lbfgs" : "gd"; }

Method parse_method(const std::string& name) {
  if (name == "gd") return Method::GradientDescent;
  if (name == "lbfgs") return Method::Lbfgs;
  throw DomainError("unknown solver method '" + name + "' (expected gd or lbfgs)");
}

std::vector<Rung> default_ladder() { return {{1e-1, 1e-1}, {1e-2, 1e-2}, {1e-3, 1e-3}, {1e-4, 1e-4}}; }

void SolveConfig::validate() const {
  penalty.validate();
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  if (!(grad_tol > 0.0)) throw DomainError("solver.grad_tol must be > 0");
  if (!(energy_tol >= 0.0)) throw DomainError("solver.energy_tol must be >= 0");
  if (max_iters < 1) throw DomainError("solver.max_iters must be >= 1");
  if (!(ls_shrink > 0.0 && ls_shrink < 1.0)) throw DomainError("ls_shrink must lie in (0,1)");
  if (!(ls_slope > 0.0 && ls_slope < 1.0)) throw DomainError("ls_slope must lie in (0,1)");
  if (lbfgs_memory < 1) throw DomainError("lbfgs memory must be >= 1");
  if (ladder.empty()) throw DomainError("solver.ladder must not be empty");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const Rung& r = ladder[k];
    if (!(r.epsilon >= 0.0) || !(r.delta > 0.0 && r.delta <= 1.0)) {
      throw DomainError("ladder rung needs epsilon >= 0 and delta in (0,1]");
    }
    if (k > 0) {
      const Rung& prev = ladder[k - 1];
      const bool monotone = r.epsilon <= prev.epsilon && r.delta <= prev.delta;
      const bool progress = r.epsilon < prev.epsilon || r.delta < prev.delta;
      if (!monotone || !progress) throw DomainError("solver.ladder must be strictly decreasing");
    }
  }
}

EnergyParams energy_params(const ObstacleProblem& problem, const SolveConfig& config) {
  EnergyParams p;
  p.epsilon = config.epsilon;
  p.delta = config.penalty.delta;
  if (config.penalty.kappa) {
    p.kappa = *config.penalty.kappa;
  } else {
    p.kappa = config.penalty.safety * compute_kappa0(problem, config.epsilon);
  }
  return p;
}

double integrate_energy(const ObstacleProblem& problem, const Field& u, const SolveConfig& config) {
  return integrate_energy(problem, u, energy_params(problem, config));
}

Field assemble_gradient(const ObstacleProblem& problem, const Field& u, const EnergyParams& params) {
  Field grad(problem.grid(), problem.components());
  energy_and_gradient(problem, u, params, grad);
  return grad;
}

double euclidean_norm(const Field& v) { return norm(v.values()); }

namespace {

SolveResult minimize_with(const ObstacleProblem& problem, const SolveConfig& config,
                          const EnergyParams& params, const Field& initial) {
  check_dirichlet(problem, initial);
  SolveResult result;
  result.u = initial;
  result.kappa = params.kappa;
  Field grad(problem.grid(), problem.components());
  Field trial = initial;
  Field step(problem.grid(), problem.components());
  Field trial_grad(problem.grid(), problem.components());

  double energy = energy_and_gradient(problem, result.u, params, grad);
  double gnorm = euclidean_norm(grad);
  result.history.push_back({energy, gnorm, 0.0});

  std::deque<CurvaturePair> memory;
  double bb_step = 0.0;  // Barzilai-Borwein step for gradient descent
  int iter = 0;
  while (true) {
    if (gnorm <= config.grad_tol) {
      result.converged = true;
      break;
    }
    if (iter >= config.max_iters) break;

    bool steepest = config.method == Method::GradientDescent || memory.empty();
    Vec dir;
    double alpha0 = 1.0;
    if (!steepest) {
      dir = lbfgs_direction(grad.values(), memory);
      if (dot(dir, grad.values()) >= 0.0) {
        memory.clear();
        steepest = true;
      }
    }
    if (steepest) {
      dir = grad.values();
      for (double& v : dir) v = -v;
      alpha0 = bb_step > 0.0 ? bb_step : std::min(1.0, 1.0 / gnorm);
    }

    bool accepted = false;
    double alpha = alpha0;
    double trial_energy = energy;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const double slope = dot(dir, grad.values());
      alpha = alpha0;
      for (int shrink = 0; shrink <= 60; ++shrink) {
        for (std::size_t c = 0; c < dir.size(); ++c) step.values()[c] = alpha * dir[c];
        const double change = energy_difference(problem, result.u, step, params);
        if (change < 0.0 && change <= config.ls_slope * alpha * slope) {
          step_to(result.u.values(), 1.0, step.values(), trial.values());
          trial_energy = energy + change;
          accepted = true;
          break;
        }
        alpha *= config.ls_shrink;
      }
      if (!accepted && !steepest) {
        // Quasi-Newton direction failed; retry once along -grad.
        memory.clear();
        steepest = true;
        dir = grad.values();
        for (double& v : dir) v = -v;
        alpha0 = std::min(1.0, 1.0 / gnorm);
      } else {
        break;
      }
    }
    if (!accepted) {
      result.grad_norm = gnorm;
      result.iterations = iter;
      std::ostringstream msg;
      msg << "line search failed after 60 shrinks at iteration " << iter << " (energy " << energy
          << ", gradient norm " << gnorm << ")";
      throw StagnationError(msg.str(), std::move(result));
    }

    energy_and_gradient(problem, trial, params, trial_grad);
    CurvaturePair pair;
    pair.s.resize(dir.size());
    pair.y.resize(dir.size());
    for (std::size_t k = 0; k < dir.size(); ++k) {
      pair.s[k] = trial.values()[k] - result.u.values()[k];
      pair.y[k] = trial_grad.values()[k] - grad.values()[k];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-300) {
      bb_step = dot(pair.s, pair.s) / sy;
      if (config.method == Method::Lbfgs) {
        pair.rho = 1.0 / sy;
        memory.push_back(std::move(pair));
        if (static_cast<int>(memory.size()) > config.lbfgs_memory) memory.pop_front();
      }
    } else {
      bb_step = 0.0;
    }

    const double previous = energy;
    std::swap(result.u, trial);
    std::swap(grad, trial_grad);
    energy = trial_energy;
    gnorm = euclidean_norm(grad);
    ++iter;
    result.history.push_back({energy, gnorm, alpha});
    if (energy_converged(previous, energy, config.energy_tol)) {
      result.converged = true;
      break;
    }
  }
  result.iterations = iter;
  result.grad_norm = gnorm;
  result.ladder_trace.push_back(make_record(problem, result, params, 0));
  return result;
}

}  // namespace

SolveResult minimize(const ObstacleProblem& problem, const SolveConfig& config, const Field& initial) {
  config.validate();
  EnergyParams params;
  params.epsilon = config.epsilon;
  params.delta = config.penalty.delta;
  double kappa0 = 0.0;
  if (config.penalty.kappa) {
    params.kappa = *config.penalty.kappa;
  } else {
    kappa0 = compute_kappa0(problem, config.epsilon);
    params.kappa = config.penalty.safety * kappa0;
  }
  SolveResult r = minimize_with(problem, config, params, initial);
  r.kappa0 = config.penalty.kappa ? config.penalty.kappa0 : kappa0;
  return r;
}

SolveResult solve_ladder(const ObstacleProblem& problem, const SolveConfig& config,
                         const std::optional<Field>& initial) {
  config.validate();
  const double kappa0 = compute_kappa0(problem, config.ladder.front().epsilon);
  const double kappa = config.penalty.kappa ? *config.penalty.kappa : config.penalty.safety * kappa0;

  SolveResult out;
  out.u = initial ? *initial : problem.g();
  out.kappa = kappa;
  out.kappa0 = kappa0;
  out.converged = true;
  for (std::size_t k = 0; k < config.ladder.size(); ++k) {
    EnergyParams params{config.ladder[k].epsilon, kappa, config.ladder[k].delta};
    SolveResult rung;
    try {
      rung = minimize_with(problem, config, params, out.u);
    } catch (const StagnationError& e) {
      std::ostringstream msg;
      msg << "rung " << k << ": " << e.what();
      SolveResult best = e.best();
      best.ladder_trace = out.ladder_trace;
      best.kappa = kappa;
      best.kappa0 = kappa0;
      throw StagnationError(msg.str(), std::move(best), static_cast<int>(k));
    }
    RungRecord rec = rung.ladder_trace.front();
    rec.rung = static_cast<int>(k);
    out.ladder_trace.push_back(rec);
    out.history.insert(out.history.end(), rung.history.begin(), rung.history.end());
    out.iterations += rung.iterations;
    out.grad_norm = rung.grad_norm;
    out.converged = out.converged && rung.converged;
    out.u = std::move(rung.u);
  }
  return out;
}

SolveResult projected_gradient_oracle(const ObstacleProblem& problem, const SolveConfig& config,
                                      const std::optional<Field>& initial) {
  config.validate();
  const Grid& grid = problem.grid();
  const Field& psi = problem.psi();
  const int N = problem.components();
  const EnergyParams params{config.epsilon, 0.0, config.penalty.delta};

  std::vector<char> free(static_cast<std::size_t>(grid.node_count() * N));
  for (int k = 0; k < grid.node_count(); ++k) {
    for (int r = 0; r < N; ++r) free[static_cast<std::size_t>(k * N + r)] = !grid.is_boundary(k);
  }
  auto project = [&](Vec& v) {
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (free[c]) v[c] = std::max(v[c], psi.values()[c]);
    }
  };

  SolveResult result;
  result.u = initial ? *initial : problem.g();
  check_dirichlet(problem, result.u);
  project(result.u.values());

  Field grad(grid, N), trial(grid, N), trial_grad(grid, N), step(grid, N);
  Vec dir(result.u.size());
  auto projected_gradient_norm = [&]() {
    double s = 0.0;
    for (std::size_t c = 0; c < dir.size(); ++c) {
      if (!free[c]) continue;
      const double moved = std::max(result.u.values()[c] - grad.values()[c], psi.values()[c]);
      const double d = moved - result.u.values()[c];
      s += d * d;
    }
    return std::sqrt(s);
  };

  double energy = energy_and_gradient(problem, result.u, params, grad);
  double pgnorm = projected_gradient_norm();
  result.history.push_back({energy, pgnorm, 0.0});
  double bb = std::min(1.0, 1.0 / std::max(euclidean_norm(grad), 1e-300));
  // Nonmonotone Armijo reference: the largest of the last few energies.
  constexpr std::size_t window = 10;
  std::deque<double> recent{energy};
  int iter = 0;
  while (true) {
    if (pgnorm <= config.grad_tol) {
      result.converged = true;
      break;
    }
    if (iter >= config.max_iters) break;

    // Spectral projected gradient: d = P(u - bb g) - u, then backtrack along d.
    double slope = 0.0;
    for (std::size_t c = 0; c < dir.size(); ++c) {
      if (!free[c]) {
        dir[c] = 0.0;
        continue;
      }
      const double target = std::max(result.u.values()[c] - bb * grad.values()[c], psi.values()[c]);
      dir[c] = target - result.u.values()[c];
      slope += dir[c] * grad.values()[c];
    }
    bool accepted = false;
    double lambda = 1.0;
    double trial_energy = energy;
    const double allowance = *std::max_element(recent.begin(), recent.end()) - energy;
    for (int shrink = 0; shrink <= 60; ++shrink) {
      step_to(result.u.values(), lambda, dir, trial.values());
      // Convex combination of feasible points; the clamp only removes round-off.
      project(trial.values());
      for (std::size_t c = 0; c < dir.size(); ++c) step.values()[c] = trial.values()[c] - result.u.values()[c];
      const double change = energy_difference(problem, result.u, step, params);
      const bool decrease = allowance > 0.0 ? change < allowance : change < 0.0;
      if (decrease && change <= allowance + config.ls_slope * lambda * slope) {
        trial_energy = energy + change;
        accepted = true;
        break;
      }
      lambda *= config.ls_shrink;
    }
    if (!accepted) {
      result.iterations = iter;
      result.grad_norm = pgnorm;
      std::ostringstream msg;
      msg << "projected line search failed at iteration " << iter << " (projected gradient norm "
          << pgnorm << ")";
      throw StagnationError(msg.str(), std::move(result));
    }
    energy_and_gradient(problem, trial, params, trial_grad);
    double ss = 0.0, sy = 0.0;
    for (std::size_t c = 0; c < dir.size(); ++c) {
      const double s = trial.values()[c] - result.u.values()[c];
      const double y = trial_grad.values()[c] - grad.values()[c];
      ss += s * s;
      sy += s * y;
    }
    bb = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : 1e12;
    const double previous = energy;
    std::swap(result.u, trial);
    std::swap(grad, trial_grad);
    energy = trial_energy;
    recent.push_back(energy);
    if (recent.size() > window) recent.pop_front();
    pgnorm = projected_gradient_norm();
    ++iter;
    result.history.push_back({energy, pgnorm, lambda});
    if (previous > energy && energy_converged(previous, energy, config.energy_tol)) {
      result.converged = true;
      break;
    }
  }
  result.iterations = iter;
  result.grad_norm = pgnorm;
  result.ladder_trace.push_back(make_record(problem, result, params, 0));
  return result;
}

}  // namespace pqobs
