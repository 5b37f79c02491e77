#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pqobs/config.hpp"
#include "pqobs/diagnostics.hpp"
#include "pqobs/solver.hpp"

namespace pqobs {

// Exit codes shared by the runners and the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnmet = 1;        // finished, but not converged or constraint not met
inline constexpr int kExitConfig = 2;       // configuration or input error
inline constexpr int kExitStagnation = 3;   // line search failed; partial artifacts written

/// Command-line override, then $PQOBS_OUTPUT_DIR, then output.directory.
std::string resolve_output_dir(const ExperimentConfig& config, const std::optional<std::string>& override_dir);

struct SolveOutcome {
  int exit_code = kExitOk;
  std::optional<SolveResult> result;
  KappaChoice kappa;
  std::string summary;
};

/// Writes solution.pqfield, solution.csv (optional), ladder_trace.csv and
/// summary.txt into out_dir; the summary is also printed to `log`.
SolveOutcome run_solve(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

struct SweepRow {
  int index = 0;
  double value = 0.0;
  double energy = 0.0;
  double violation = 0.0;
  double w1q_norm = 0.0;
  double seminorm = 0.0;
  int iterations = 0;
  std::string status;
  double wall_time = 0.0;
};

struct SweepOutcome {
  int exit_code = kExitOk;
  std::vector<SweepRow> rows;
};

/// Axis names accepted by run_sweep.
std::vector<std::string> sweep_axes();

/// Expands value items ("0.5", "2k0" for kappa, "geom:a:b:n") into numbers.
std::vector<double> expand_sweep_values(const std::string& axis, const std::vector<std::string>& items,
                                        double kappa0);

/// One solve per value, in the given order, warm-started from the previous
/// point when the values are monotone. Failed points get a status and the
/// sweep continues. Writes sweep_<axis>.csv into out_dir. Values default to
/// the [sweep] section.
SweepOutcome run_sweep(const ExperimentConfig& config, const std::string& axis,
                       const std::vector<std::string>& values, const std::string& out_dir, std::ostream& log);

struct DiagnoseOutcome {
  int exit_code = kExitOk;
  std::optional<DiagnosticsReport> report;
};

/// Evaluates the selected reports on a field file; writes diagnostics.csv
/// (and lavrentiev.csv when selected). Grid mismatch exits with kExitConfig.
DiagnoseOutcome run_diagnose(const ExperimentConfig& config, const std::string& field_file,
                             const std::string& out_dir, std::ostream& log);

}  // namespace pqobs
