#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqobs/diagnostics.hpp"
#include "pqobs/problem.hpp"
#include "pqobs/solver.hpp"

namespace pqobs {

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-form expressions accepted for psi, g and the coefficient a(x):
//   constant c
//   affine c a [b]                 c + a x + b y
//   parabolic_cap h a cx [cy]      h - a |x - c|^2
//   radial_bump h r cx [cy]        h (1 - |x - c|^2 / r^2)_+^2
//   power_kink c beta [s]          s (x - c)_+^beta
//   holder_abs c alpha [s]         s |x - c|^alpha
//   stripes a0 a1 k                a0 + a1 sin^2(k pi x)
// psi and g additionally accept file:<path> (a field file on the same grid).
using Expression = std::function<double(const Point&)>;
Expression parse_expression(const std::string& text);
std::vector<std::string> expression_catalog();

struct ProblemSpec {
  Box box = Box::rectangle(0.0, 1.0, 0.0, 1.0);
  int nodes_x = 33;
  int nodes_y = 33;
  int components = 1;
  std::string integrand = "p_power";
  GrowthParams params;
  std::string coefficient = "constant 1";
  /// One expression per component.
  std::vector<std::string> psi{"constant 0"};
  std::vector<std::string> g{"constant 0"};
};

struct PenaltySpec {
  /// "auto" (safety * kappa0), a number, or a multiple of kappa0 such as "2k0".
  std::string kappa = "auto";
  double safety = 2.0;
  double delta = 0.1;
  /// run_solve reports success only if the final violation is below this
  /// (checked when kappa is auto).
  double violation_tol = 1e-2;
};

enum class Report { W1q, VL2, Nikolskii, Violation, Gap, Lavrentiev };

struct DiagnosticsSpec {
  std::vector<Report> reports{Report::W1q, Report::VL2, Report::Nikolskii, Report::Violation, Report::Gap};
  DiagnosticsOptions options;
  /// Nodes with u - psi <= contact_tol count as contact; empty means
  /// 10 * final delta.
  std::optional<double> contact_tol;
};

struct OutputSpec {
  std::string directory = "out";
  bool field_csv = true;
};

struct SweepSpec {
  std::vector<std::string> values;
};

struct ExperimentConfig {
  ProblemSpec problem;
  SolveConfig solver;
  PenaltySpec penalty;
  DiagnosticsSpec diagnostics;
  OutputSpec output;
  SweepSpec sweep;
};

/// Parses the INI text; unknown sections or keys are errors. Relative
/// file: paths are resolved against base_dir.
ExperimentConfig parse_config(std::istream& in, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Every setting, defaults included, as INI text.
std::string resolved_config(const ExperimentConfig& config);
/// resolved_config as "# "-prefixed lines for artifact headers.
std::vector<std::string> provenance_lines(const ExperimentConfig& config);

Grid build_grid(const ExperimentConfig& config);
/// Throws ConfigError for unknown integrands or expressions and ShapeError
/// for field files on another grid.
ObstacleProblem build_problem(const ExperimentConfig& config);

/// kappa0 of the problem (at the first rung's epsilon) and the resolved kappa.
struct KappaChoice {
  double kappa0 = 0.0;
  double kappa = 0.0;
  bool automatic = false;
};
KappaChoice resolve_kappa(const ExperimentConfig& config, const ObstacleProblem& problem);
/// Parses "auto", "1.5" or "0.25k0" given kappa0.
double parse_kappa(const std::string& text, double kappa0, double safety);

std::string to_string(Report report);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace pqobs
