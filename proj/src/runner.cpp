#include "pqobs/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "pqobs/errors.hpp"
#include "pqobs/penalty.hpp"

namespace pqobs {

namespace fs = std::filesystem;

std::string resolve_output_dir(const ExperimentConfig& config, const std::optional<std::string>& override_dir) {
  if (override_dir && !override_dir->empty()) return *override_dir;
  if (const char* env = std::getenv("PQOBS_OUTPUT_DIR"); env && *env) return env;
  return config.output.directory;
}

namespace {

std::vector<std::string> header_comments(const ExperimentConfig& config) {
  std::vector<std::string> lines{"resolved configuration"};
  for (const auto& l : provenance_lines(config)) lines.push_back(l);
  return lines;
}

std::ofstream open_artifact(const std::string& dir, const std::string& name, const ExperimentConfig& config) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name);
  if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  for (const auto& l : header_comments(config)) out << "# " << l << "\n";
  return out;
}

void write_ladder_trace(const std::string& dir, const ExperimentConfig& config, const std::vector<RungRecord>& trace) {
  std::ofstream out = open_artifact(dir, "ladder_trace.csv", config);
  out << "rung,epsilon,delta,kappa,energy,violation,w1q_norm,grad_norm,iterations,converged\n";
  for (const RungRecord& r : trace) {
    out << r.rung << ',' << format_double(r.epsilon) << ',' << format_double(r.delta) << ','
        << format_double(r.kappa) << ',' << format_double(r.energy) << ',' << format_double(r.violation) << ','
        << format_double(r.w1q_norm) << ',' << format_double(r.grad_norm) << ',' << r.iterations << ','
        << (r.converged ? 1 : 0) << "\n";
  }
}

std::string gap_line(const GapCondition& g, const GrowthParams& params) {
  std::ostringstream s;
  if (g.satisfied) {
    s << "gap_condition: satisfied (q = " << format_double(params.q)
      << ", bound = " << format_double(g.applicable_bound) << ")";
  } else {
    s << "warning: gap condition violated (q = " << format_double(params.q)
      << ", bound = " << format_double(g.applicable_bound) << ")";
  }
  return s.str();
}

std::string contact_line(const Field& u, const Field& psi, double tol) {
  const Grid& grid = u.grid();
  int count = 0;
  Point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point hi{-lo[0], -lo[1]};
  // Boundary values are prescribed, so only free nodes count as contact.
  for (int k = 0; k < grid.node_count(); ++k) {
    if (grid.is_boundary(k)) continue;
    bool touching = false;
    for (int r = 0; r < u.components(); ++r) touching = touching || u(k, r) - psi(k, r) <= tol;
    if (!touching) continue;
    ++count;
    const Point x = grid.node_point(k);
    for (int a = 0; a < grid.dim(); ++a) {
      lo[a] = std::min(lo[a], x[a]);
      hi[a] = std::max(hi[a], x[a]);
    }
  }
  std::ostringstream s;
  s << "contact_set: ";
  if (count == 0) {
    s << "empty";
  } else {
    s << count << " nodes, x in [" << format_double(lo[0]) << ", " << format_double(hi[0]) << "]";
    if (grid.dim() == 2) s << ", y in [" << format_double(lo[1]) << ", " << format_double(hi[1]) << "]";
  }
  s << " (tolerance " << format_double(tol) << ")";
  return s.str();
}

}  // namespace

SolveOutcome run_solve(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
  SolveOutcome outcome;
  std::optional<ObstacleProblem> problem;
  try {
    problem.emplace(build_problem(config));
    outcome.kappa = resolve_kappa(config, *problem);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  }
  SolveConfig sc = config.solver;
  sc.penalty.kappa = outcome.kappa.kappa;
  sc.penalty.kappa0 = outcome.kappa.kappa0;

  std::string status = "converged";
  SolveResult result;
  try {
    result = solve_ladder(*problem, sc);
    if (!result.converged) status = "not converged";
  } catch (const StagnationError& e) {
    result = e.best();
    status = std::string("stagnated: ") + e.what();
    outcome.exit_code = kExitStagnation;
  }
  result.kappa = outcome.kappa.kappa;
  result.kappa0 = outcome.kappa.kappa0;

  const GrowthParams& gp = problem->integrand().params();
  const GapCondition gap = gap_check(gp, problem->grid().dim(), problem->integrand().autonomous());
  const double violation = max_violation(result.u, problem->psi());
  const double final_delta = sc.ladder.back().delta;
  const double contact_tol = config.diagnostics.contact_tol.value_or(10.0 * final_delta);

  std::ostringstream summary;
  summary << "status: " << status << "\n";
  summary << "kappa0: " << format_double(outcome.kappa.kappa0) << "\n";
  summary << "kappa: " << format_double(outcome.kappa.kappa) << (outcome.kappa.automatic ? " (auto)" : "") << "\n";
  summary << gap_line(gap, gp) << "\n";
  if (!result.ladder_trace.empty()) {
    const RungRecord& r = result.ladder_trace.back();
    summary << "final_rung: " << r.rung << " epsilon = " << format_double(r.epsilon)
            << " delta = " << format_double(r.delta) << " energy = " << format_double(r.energy)
            << " w1q_norm = " << format_double(r.w1q_norm) << " iterations = " << r.iterations
            << " grad_norm = " << format_double(r.grad_norm) << "\n";
  }
  summary << "violation: " << format_double(violation) << "\n";
  summary << contact_line(result.u, problem->psi(), contact_tol) << "\n";
  summary << "total_iterations: " << result.iterations << "\n";

  if (outcome.exit_code == kExitOk) {
    const bool constraint_ok = !outcome.kappa.automatic || violation <= config.penalty.violation_tol;
    if (!result.converged || !constraint_ok) outcome.exit_code = kExitUnmet;
    if (!constraint_ok) summary << "warning: violation above penalty.violation_tol\n";
  }

  try {
    fs::create_directories(out_dir);
    write_field((fs::path(out_dir) / "solution.pqfield").string(), result.u, header_comments(config));
    if (config.output.field_csv) write_field_csv((fs::path(out_dir) / "solution.csv").string(), result.u, header_comments(config));
    write_ladder_trace(out_dir, config, result.ladder_trace);
    std::ofstream s = open_artifact(out_dir, "summary.txt", config);
    s << summary.str();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
  }
  log << summary.str();
  outcome.summary = summary.str();
  outcome.result = std::move(result);
  return outcome;
}

// ---------------------------------------------------------------------------

std::vector<std::string> sweep_axes() { return {"kappa", "delta", "epsilon", "resolution", "q"}; }

namespace {

double parse_sweep_number(const std::string& axis, const std::string& text, double kappa0) {
  if (axis == "kappa") return parse_kappa(text, kappa0, 1.0);
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError("sweep: '" + text + "' is not a number");
  return v;
}

}  // namespace

std::vector<double> expand_sweep_values(const std::string& axis, const std::vector<std::string>& items, double kappa0) {
  std::vector<double> out;
  for (const auto& item : items) {
    if (item.rfind("geom:", 0) == 0) {
      std::vector<std::string> parts;
      std::stringstream ss(item.substr(5));
      std::string p;
      while (std::getline(ss, p, ':')) parts.push_back(p);
      if (parts.size() != 3) throw ConfigError("sweep: geometric range must read geom:start:stop:count");
      const double a = parse_sweep_number(axis, parts[0], kappa0);
      const double b = parse_sweep_number(axis, parts[1], kappa0);
      const double n = parse_sweep_number("count", parts[2], kappa0);
      if (!(a > 0.0 && b > 0.0) || n < 2 || n != std::floor(n)) throw ConfigError("sweep: bad geometric range '" + item + "'");
      const int count = static_cast<int>(n);
      for (int k = 0; k < count; ++k) {
        out.push_back(k == count - 1 ? b : a * std::pow(b / a, static_cast<double>(k) / (count - 1)));
      }
    } else {
      out.push_back(parse_sweep_number(axis, item, kappa0));
    }
  }
  if (out.empty()) throw ConfigError("sweep: no values given");
  if (axis == "resolution") {
    for (double v : out) {
      if (v < 3 || v != std::floor(v)) throw ConfigError("sweep: resolutions must be integers >= 3");
    }
  }
  return out;
}

SweepOutcome run_sweep(const ExperimentConfig& config, const std::string& axis, const std::vector<std::string>& values,
                       const std::string& out_dir, std::ostream& log) {
  SweepOutcome outcome;
  std::vector<double> points;
  double base_kappa = 0.0;
  try {
    bool known = false;
    for (const auto& a : sweep_axes()) known = known || a == axis;
    if (!known) throw ConfigError("sweep: unknown axis '" + axis + "'");
    const ObstacleProblem base = build_problem(config);
    const KappaChoice kc = resolve_kappa(config, base);
    base_kappa = kc.kappa;
    points = expand_sweep_values(axis, values.empty() ? config.sweep.values : values, kc.kappa0);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  }

  bool increasing = true, decreasing = true;
  for (std::size_t k = 1; k < points.size(); ++k) {
    increasing = increasing && points[k] > points[k - 1];
    decreasing = decreasing && points[k] < points[k - 1];
  }
  const bool warm = increasing || decreasing;
  const double s = config.diagnostics.options.seminorm_s.empty() ? 0.45 : config.diagnostics.options.seminorm_s.front();
  const double t = config.diagnostics.options.seminorm_t.empty() ? 2.0 : config.diagnostics.options.seminorm_t.front();

  std::optional<Field> previous;
  for (std::size_t k = 0; k < points.size(); ++k) {
    SweepRow row;
    row.index = static_cast<int>(k);
    row.value = points[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      ExperimentConfig cfg = config;
      SolveConfig& sc = cfg.solver;
      bool fixed_kappa = true;
      double kappa = base_kappa;
      if (axis == "kappa") {
        kappa = points[k];
      } else if (axis == "delta") {
        sc.ladder = {{sc.ladder.back().epsilon, points[k]}};
      } else if (axis == "epsilon") {
        sc.ladder = {{points[k], sc.ladder.back().delta}};
      } else if (axis == "resolution") {
        cfg.problem.nodes_x = static_cast<int>(points[k]);
        if (cfg.problem.box.n == 2) cfg.problem.nodes_y = static_cast<int>(points[k]);
        fixed_kappa = false;
      } else {  // q
        cfg.problem.params.q = points[k];
        cfg.problem.params.validate();
        fixed_kappa = false;
      }
      const ObstacleProblem problem = build_problem(cfg);
      if (!fixed_kappa) kappa = resolve_kappa(cfg, problem).kappa;
      sc.penalty.kappa = kappa;
      std::optional<Field> initial;
      if (warm && previous) {
        if (previous->grid() == problem.grid()) {
          initial = *previous;
        } else if (nested(previous->grid(), problem.grid())) {
          initial = prolong(*previous, problem.grid());
        }
        // Dirichlet data may differ between points; keep the boundary of the new problem.
        if (initial) {
          for (int n = 0; n < problem.grid().node_count(); ++n) {
            if (!problem.grid().is_boundary(n)) continue;
            for (int r = 0; r < problem.components(); ++r) (*initial)(n, r) = problem.g()(n, r);
          }
        }
      }
      SolveResult res;
      try {
        res = solve_ladder(problem, sc, initial);
        row.status = res.converged ? "ok" : "not_converged";
      } catch (const StagnationError& e) {
        res = e.best();
        row.status = "stagnated";
      }
      const RungRecord last = res.ladder_trace.empty() ? RungRecord{} : res.ladder_trace.back();
      row.energy = res.ladder_trace.empty() ? std::nan("") : last.energy;
      row.violation = max_violation(res.u, problem.psi());
      row.w1q_norm = w1q_norm(res.u, problem.integrand().params().q);
      const GrowthParams& gp = problem.integrand().params();
      row.seminorm = nikolskii_seminorm(v_of_gradient(gradient(res.u), gp.mu, gp.p), s, t, default_offsets(problem.grid()));
      row.iterations = res.iterations;
      previous = res.u;
    } catch (const std::exception& e) {
      row.status = "error";
      row.energy = row.violation = row.w1q_norm = row.seminorm = std::nan("");
      log << "sweep point " << k << " (" << format_double(points[k]) << "): " << e.what() << "\n";
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (row.status != "ok") outcome.exit_code = kExitUnmet;
    log << axis << " = " << format_double(row.value) << ": status " << row.status << ", violation "
        << format_double(row.violation) << ", energy " << format_double(row.energy) << "\n";
    outcome.rows.push_back(row);
  }

  try {
    std::ofstream out = open_artifact(out_dir, "sweep_" + axis + ".csv", config);
    out << "# wall_time is measured, not reproducible\n";
    out << "index,parameter,value,energy,violation,w1q_norm,seminorm,iterations,status,wall_time\n";
    for (const SweepRow& r : outcome.rows) {
      out << r.index << ',' << axis << ',' << format_double(r.value) << ',' << format_double(r.energy) << ','
          << format_double(r.violation) << ',' << format_double(r.w1q_norm) << ',' << format_double(r.seminorm) << ','
          << r.iterations << ',' << r.status << ',' << format_double(r.wall_time) << "\n";
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
  }
  return outcome;
}

// ---------------------------------------------------------------------------

DiagnoseOutcome run_diagnose(const ExperimentConfig& config, const std::string& field_file, const std::string& out_dir,
                             std::ostream& log) {
  DiagnoseOutcome outcome;
  std::optional<ObstacleProblem> problem;
  Field u;
  try {
    problem.emplace(build_problem(config));
    u = read_field(field_file);
    if (u.grid() != problem->grid() || u.components() != problem->components()) {
      throw ShapeError("field file '" + field_file + "' does not match the configured grid");
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  }

  const DiagnosticsSpec& spec = config.diagnostics;
  auto selected = [&spec](Report r) {
    for (Report x : spec.reports) {
      if (x == r) return true;
    }
    return false;
  };
  DiagnosticsOptions options = spec.options;
  if (!selected(Report::Nikolskii)) {
    options.seminorm_s.clear();
    options.seminorm_t.clear();
  }
  options.lavrentiev = selected(Report::Lavrentiev);

  DiagnosticsReport rep;
  try {
    rep = diagnose(*problem, u, options);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  }

  std::ostringstream summary;
  std::vector<std::string> rows;
  auto row = [&rows](const std::string& metric, const std::string& s, const std::string& t, double v) {
    rows.push_back(metric + "," + s + "," + t + "," + format_double(v));
  };
  if (selected(Report::W1q)) {
    row("w1q_norm", "", "", rep.w1q_norm);
    summary << "w1q_norm: " << format_double(rep.w1q_norm) << "\n";
  }
  if (selected(Report::VL2)) {
    row("v_l2", "", "", rep.v_l2);
    summary << "v_l2: " << format_double(rep.v_l2) << "\n";
  }
  for (const auto& [st, v] : rep.nikolskii) {
    row("nikolskii", format_double(st.first), format_double(st.second), v);
    summary << "nikolskii(s = " << format_double(st.first) << ", t = " << format_double(st.second)
            << "): " << format_double(v) << "\n";
  }
  if (selected(Report::Violation)) {
    row("violation", "", "", rep.violation);
    summary << "violation: " << format_double(rep.violation) << "\n";
  }
  if (selected(Report::Gap)) {
    const GapCondition& g = rep.gap_condition;
    row("q_max_autonomous", "", "", g.q_max_autonomous);
    if (g.q_max_nonautonomous) row("q_max_nonautonomous", "", "", *g.q_max_nonautonomous);
    row("gap_bound", "", "", g.applicable_bound);
    row("gap_satisfied", "", "", g.satisfied ? 1.0 : 0.0);
    summary << gap_line(g, problem->integrand().params()) << "\n";
  }
  if (rep.lavrentiev_probe) {
    const LavrentievReport& l = *rep.lavrentiev_probe;
    summary << "lavrentiev: base energy " << format_double(l.base_energy) << ", gap estimate "
            << format_double(l.gap_estimate) << (l.feasible ? "" : " (competitor infeasible)") << "\n";
    row("lavrentiev_gap", "", "", l.gap_estimate);
  }

  try {
    std::ofstream out = open_artifact(out_dir, "diagnostics.csv", config);
    out << "# field: " << field_file << "\n";
    out << "metric,s,t,value\n";
    for (const auto& r : rows) out << r << "\n";
    if (rep.lavrentiev_probe) {
      std::ofstream lav = open_artifact(out_dir, "lavrentiev.csv", config);
      lav << "radius,energy,base_energy\n";
      const LavrentievReport& l = *rep.lavrentiev_probe;
      for (std::size_t k = 0; k < l.radii.size(); ++k) {
        lav << format_double(l.radii[k]) << ',' << format_double(l.energies[k]) << ','
            << format_double(l.base_energy) << "\n";
      }
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
  }
  log << summary.str();
  outcome.report = std::move(rep);
  return outcome;
}

}  // namespace pqobs
