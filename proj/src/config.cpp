#include "pqobs/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "pqobs/errors.hpp"
#include "pqobs/penalty.hpp"

namespace pqobs {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Comma- and/or whitespace-separated list.
std::vector<std::string> split_list(const std::string& text) {
  std::string t = text;
  for (char& c : t) {
    if (c == ',') c = ' ';
  }
  return split_words(t);
}

double to_number(const std::string& word, const std::string& where) {
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(word, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + word + "' is not a number");
  }
  if (used != word.size()) throw ConfigError(where + ": '" + word + "' is not a number");
  return v;
}

int to_int(const std::string& word, const std::string& where) {
  const double v = to_number(word, where);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where + ": '" + word + "' is not an integer");
  return static_cast<int>(v);
}

bool to_bool(const std::string& word, const std::string& where) {
  if (word == "true" || word == "yes" || word == "1" || word == "on") return true;
  if (word == "false" || word == "no" || word == "0" || word == "off") return false;
  throw ConfigError(where + ": '" + word + "' is not a boolean");
}

struct Catalog {
  int min_args;
  int max_args;
};

const std::map<std::string, Catalog>& catalog() {
  static const std::map<std::string, Catalog> c{
      {"constant", {1, 1}},      {"affine", {2, 3}},     {"parabolic_cap", {3, 4}}, {"radial_bump", {3, 4}},
      {"power_kink", {2, 3}},    {"holder_abs", {2, 3}}, {"stripes", {3, 3}},
  };
  return c;
}

std::optional<double> constant_value(const std::string& text) {
  const auto w = split_words(text);
  if (w.size() == 2 && w[0] == "constant") return to_number(w[1], "expression");
  return std::nullopt;
}

bool is_file_expression(const std::string& text) { return text.rfind("file:", 0) == 0; }

}  // namespace

std::vector<std::string> expression_catalog() {
  std::vector<std::string> names;
  for (const auto& [name, _] : catalog()) names.push_back(name);
  return names;
}

Expression parse_expression(const std::string& text) {
  const auto w = split_words(text);
  if (w.empty()) throw ConfigError("empty expression");
  const auto it = catalog().find(w[0]);
  if (it == catalog().end()) throw ConfigError("unknown expression '" + w[0] + "'");
  const int nargs = static_cast<int>(w.size()) - 1;
  if (nargs < it->second.min_args || nargs > it->second.max_args) {
    throw ConfigError("expression '" + w[0] + "' takes " + std::to_string(it->second.min_args) + " to " +
                      std::to_string(it->second.max_args) + " arguments");
  }
  std::vector<double> a;
  for (int k = 1; k <= nargs; ++k) a.push_back(to_number(w[static_cast<std::size_t>(k)], "expression '" + text + "'"));
  auto arg = [&a](std::size_t k, double fallback) { return k < a.size() ? a[k] : fallback; };
  const std::string& name = w[0];

  if (name == "constant") {
    const double c = a[0];
    return [c](const Point&) { return c; };
  }
  if (name == "affine") {
    const double c = a[0], ax = a[1], by = arg(2, 0.0);
    return [=](const Point& x) { return c + ax * x[0] + by * x[1]; };
  }
  if (name == "parabolic_cap") {
    const double h = a[0], s = a[1], cx = a[2], cy = arg(3, 0.0);
    return [=](const Point& x) { return h - s * ((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)); };
  }
  if (name == "radial_bump") {
    const double h = a[0], r = a[1], cx = a[2], cy = arg(3, 0.0);
    if (!(r > 0.0)) throw ConfigError("radial_bump: radius must be positive");
    return [=](const Point& x) {
      const double t = 1.0 - ((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / (r * r);
      return t > 0.0 ? h * t * t : 0.0;
    };
  }
  if (name == "power_kink") {
    const double c = a[0], beta = a[1], s = arg(2, 1.0);
    if (!(beta > 0.0)) throw ConfigError("power_kink: exponent must be positive");
    return [=](const Point& x) { return x[0] > c ? s * std::pow(x[0] - c, beta) : 0.0; };
  }
  if (name == "holder_abs") {
    const double c = a[0], alpha = a[1], s = arg(2, 1.0);
    if (!(alpha > 0.0)) throw ConfigError("holder_abs: exponent must be positive");
    return [=](const Point& x) { return s * std::pow(std::abs(x[0] - c), alpha); };
  }
  // stripes
  const double a0 = a[0], a1 = a[1], k = a[2];
  return [=](const Point& x) {
    const double s = std::sin(k * std::numbers::pi * x[0]);
    return a0 + a1 * s * s;
  };
}

std::string to_string(Report report) {
  switch (report) {
    case Report::W1q: return "w1q";
    case Report::VL2: return "v_l2";
    case Report::Nikolskii: return "nikolskii";
    case Report::Violation: return "violation";
    case Report::Gap: return "gap";
    case Report::Lavrentiev: return "lavrentiev";
  }
  return "?";
}

namespace {

Report parse_report(const std::string& s) {
  for (Report r : {Report::W1q, Report::VL2, Report::Nikolskii, Report::Violation, Report::Gap, Report::Lavrentiev}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("diagnostics.reports: unknown report '" + s + "'");
}

std::string target_name(SeminormTarget t) {
  switch (t) {
    case SeminormTarget::Field: return "field";
    case SeminormTarget::Gradient: return "gradient";
    case SeminormTarget::VGradient: return "v_gradient";
  }
  return "?";
}

SeminormTarget parse_target(const std::string& s) {
  for (SeminormTarget t : {SeminormTarget::Field, SeminormTarget::Gradient, SeminormTarget::VGradient}) {
    if (target_name(t) == s) return t;
  }
  throw ConfigError("diagnostics.seminorm_target: unknown target '" + s + "'");
}

std::vector<double> to_numbers(const std::string& text, const std::string& where) {
  std::vector<double> out;
  for (const auto& w : split_list(text)) out.push_back(to_number(w, where));
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
  return s;
}

std::vector<Rung> parse_ladder(const std::string& text) {
  if (text == "default") return default_ladder();
  std::vector<Rung> out;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("solver.ladder: expected epsilon:delta pairs, got '" + item + "'");
    out.push_back({to_number(item.substr(0, colon), "solver.ladder"), to_number(item.substr(colon + 1), "solver.ladder")});
  }
  if (out.empty()) throw ConfigError("solver.ladder: empty ladder");
  return out;
}

// Per-component expressions: key applies to every component, key_<r> overrides row r (1-based).
std::vector<std::string> component_expressions(const pt::ptree& sec, const std::string& key, int N,
                                               const std::string& fallback, const std::string& base_dir) {
  std::vector<std::string> out(static_cast<std::size_t>(N), sec.get<std::string>(key, fallback));
  for (int r = 1; r <= N; ++r) {
    if (auto v = sec.get_optional<std::string>(key + "_" + std::to_string(r))) out[static_cast<std::size_t>(r - 1)] = *v;
  }
  for (auto& e : out) {
    if (is_file_expression(e)) {
      fs::path p = e.substr(5);
      if (p.is_relative()) p = fs::path(base_dir) / p;
      e = "file:" + p.lexically_normal().string();
    } else {
      parse_expression(e);  // validate now
    }
  }
  return out;
}

void check_keys(const pt::ptree& tree) {
  static const std::map<std::string, std::set<std::string>> allowed{
      {"problem", {"dim", "x_min", "x_max", "y_min", "y_max", "nodes", "nodes_x", "nodes_y", "components", "integrand",
                   "p", "q", "mu", "lambda", "Lambda", "alpha", "coefficient", "psi", "g"}},
      {"solver", {"method", "grad_tol", "energy_tol", "max_iters", "ls_shrink", "ls_slope", "lbfgs_memory",
                  "deterministic", "ladder"}},
      {"penalty", {"kappa", "safety", "delta", "violation_tol"}},
      {"diagnostics", {"reports", "seminorm_s", "seminorm_t", "seminorm_target", "eta_width", "radii", "contact_tol"}},
      {"output", {"directory", "field_csv"}},
      {"sweep", {"values"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, _] : body) {
      if (it->second.count(key)) continue;
      // psi_<r>, g_<r>
      const bool component_key = section == "problem" && (key.rfind("psi_", 0) == 0 || key.rfind("g_", 0) == 0);
      if (!component_key) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  check_keys(tree);
  ExperimentConfig cfg;
  const pt::ptree empty;
  auto section = [&](const char* name) -> const pt::ptree& {
    const auto child = tree.get_child_optional(name);
    return child ? *child : empty;
  };
  auto num = [](const pt::ptree& s, const std::string& where, const char* key, double fallback) {
    const auto v = s.get_optional<std::string>(key);
    return v ? to_number(*v, where + "." + key) : fallback;
  };
  auto integer = [](const pt::ptree& s, const std::string& where, const char* key, int fallback) {
    const auto v = s.get_optional<std::string>(key);
    return v ? to_int(*v, where + "." + key) : fallback;
  };

  // [problem]
  {
    const pt::ptree& s = section("problem");
    ProblemSpec& p = cfg.problem;
    const int dim = integer(s, "problem", "dim", 2);
    if (dim != 1 && dim != 2) throw ConfigError("problem.dim must be 1 or 2");
    const double x0 = num(s, "problem", "x_min", 0.0), x1 = num(s, "problem", "x_max", 1.0);
    const double y0 = num(s, "problem", "y_min", 0.0), y1 = num(s, "problem", "y_max", 1.0);
    if (!(x1 > x0) || (dim == 2 && !(y1 > y0))) throw ConfigError("problem: empty domain");
    p.box = dim == 1 ? Box::interval(x0, x1) : Box::rectangle(x0, x1, y0, y1);
    const int nodes = integer(s, "problem", "nodes", 33);
    p.nodes_x = integer(s, "problem", "nodes_x", nodes);
    p.nodes_y = dim == 1 ? 1 : integer(s, "problem", "nodes_y", nodes);
    if (p.nodes_x < 3 || (dim == 2 && p.nodes_y < 3)) throw ConfigError("problem: resolution must be at least 3 per axis");
    p.components = integer(s, "problem", "components", 1);
    if (p.components < 1) throw ConfigError("problem.components must be positive");
    p.integrand = s.get<std::string>("integrand", "p_power");
    if (p.integrand != "p_power" && p.integrand != "p_power_regularized" && p.integrand != "double_phase" &&
        p.integrand != "holder_modulated") {
      throw ConfigError("problem.integrand: unknown kind '" + p.integrand + "'");
    }
    p.params.p = num(s, "problem", "p", 2.0);
    p.params.q = num(s, "problem", "q", p.params.p);
    p.params.mu = num(s, "problem", "mu", p.integrand == "p_power_regularized" ? 1.0 : 0.0);
    p.params.lambda = num(s, "problem", "lambda", 1.0);
    p.params.Lambda = num(s, "problem", "Lambda", 1.0);
    if (auto a = s.get_optional<std::string>("alpha")) p.params.alpha = to_number(*a, "problem.alpha");
    try {
      p.params.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("problem: ") + e.what());
    }
    p.coefficient = s.get<std::string>("coefficient", "constant 1");
    parse_expression(p.coefficient);
    p.psi = component_expressions(s, "psi", p.components, "constant 0", base_dir);
    p.g = component_expressions(s, "g", p.components, "constant 0", base_dir);
  }

  // [solver]
  {
    const pt::ptree& s = section("solver");
    SolveConfig& c = cfg.solver;
    try {
      c.method = parse_method(s.get<std::string>("method", "lbfgs"));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("solver.method: ") + e.what());
    }
    c.grad_tol = num(s, "solver", "grad_tol", c.grad_tol);
    c.energy_tol = num(s, "solver", "energy_tol", c.energy_tol);
    c.max_iters = integer(s, "solver", "max_iters", c.max_iters);
    c.ls_shrink = num(s, "solver", "ls_shrink", c.ls_shrink);
    c.ls_slope = num(s, "solver", "ls_slope", c.ls_slope);
    c.lbfgs_memory = integer(s, "solver", "lbfgs_memory", c.lbfgs_memory);
    if (auto d = s.get_optional<std::string>("deterministic")) c.deterministic = to_bool(*d, "solver.deterministic");
    c.ladder = parse_ladder(s.get<std::string>("ladder", "default"));
    c.epsilon = c.ladder.back().epsilon;
  }

  // [penalty]
  {
    const pt::ptree& s = section("penalty");
    PenaltySpec& p = cfg.penalty;
    p.kappa = s.get<std::string>("kappa", "auto");
    p.safety = num(s, "penalty", "safety", p.safety);
    p.delta = num(s, "penalty", "delta", p.delta);
    p.violation_tol = num(s, "penalty", "violation_tol", p.violation_tol);
    parse_kappa(p.kappa, 1.0, p.safety);  // syntax check
    cfg.solver.penalty.safety = p.safety;
    cfg.solver.penalty.delta = p.delta;
  }
  try {
    cfg.solver.validate();
    cfg.solver.penalty.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }

  // [diagnostics]
  {
    const pt::ptree& s = section("diagnostics");
    DiagnosticsSpec& d = cfg.diagnostics;
    if (auto r = s.get_optional<std::string>("reports")) {
      d.reports.clear();
      for (const auto& w : split_list(*r)) d.reports.push_back(parse_report(w));
    }
    if (auto v = s.get_optional<std::string>("seminorm_s")) d.options.seminorm_s = to_numbers(*v, "diagnostics.seminorm_s");
    if (auto v = s.get_optional<std::string>("seminorm_t")) d.options.seminorm_t = to_numbers(*v, "diagnostics.seminorm_t");
    if (auto v = s.get_optional<std::string>("seminorm_target")) d.options.target = parse_target(*v);
    d.options.eta_width = num(s, "diagnostics", "eta_width", d.options.eta_width);
    if (auto v = s.get_optional<std::string>("radii")) d.options.radii = to_numbers(*v, "diagnostics.radii");
    if (auto v = s.get_optional<std::string>("contact_tol"); v && *v != "auto") {
      d.contact_tol = to_number(*v, "diagnostics.contact_tol");
    }
    for (Report r : d.reports) d.options.lavrentiev = d.options.lavrentiev || r == Report::Lavrentiev;
    if (d.options.lavrentiev && d.options.radii.empty()) {
      throw ConfigError("diagnostics: the lavrentiev report needs radii");
    }
  }

  // [output]
  {
    const pt::ptree& s = section("output");
    cfg.output.directory = s.get<std::string>("directory", cfg.output.directory);
    if (auto v = s.get_optional<std::string>("field_csv")) cfg.output.field_csv = to_bool(*v, "output.field_csv");
  }

  // [sweep]
  if (auto v = section("sweep").get_optional<std::string>("values")) cfg.sweep.values = split_list(*v);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

std::string resolved_config(const ExperimentConfig& cfg) {
  pt::ptree t;
  const ProblemSpec& p = cfg.problem;
  t.put("problem.dim", p.box.n);
  t.put("problem.x_min", format_double(p.box.lo[0]));
  t.put("problem.x_max", format_double(p.box.hi[0]));
  if (p.box.n == 2) {
    t.put("problem.y_min", format_double(p.box.lo[1]));
    t.put("problem.y_max", format_double(p.box.hi[1]));
  }
  t.put("problem.nodes_x", p.nodes_x);
  if (p.box.n == 2) t.put("problem.nodes_y", p.nodes_y);
  t.put("problem.components", p.components);
  t.put("problem.integrand", p.integrand);
  t.put("problem.p", format_double(p.params.p));
  t.put("problem.q", format_double(p.params.q));
  t.put("problem.mu", format_double(p.params.mu));
  t.put("problem.lambda", format_double(p.params.lambda));
  t.put("problem.Lambda", format_double(p.params.Lambda));
  if (p.params.alpha) t.put("problem.alpha", format_double(*p.params.alpha));
  t.put("problem.coefficient", p.coefficient);
  for (int r = 0; r < p.components; ++r) {
    t.put("problem.psi_" + std::to_string(r + 1), p.psi[static_cast<std::size_t>(r)]);
    t.put("problem.g_" + std::to_string(r + 1), p.g[static_cast<std::size_t>(r)]);
  }

  const SolveConfig& s = cfg.solver;
  t.put("solver.method", to_string(s.method));
  t.put("solver.grad_tol", format_double(s.grad_tol));
  t.put("solver.energy_tol", format_double(s.energy_tol));
  t.put("solver.max_iters", s.max_iters);
  t.put("solver.ls_shrink", format_double(s.ls_shrink));
  t.put("solver.ls_slope", format_double(s.ls_slope));
  t.put("solver.lbfgs_memory", s.lbfgs_memory);
  t.put("solver.deterministic", s.deterministic ? "true" : "false");
  std::string ladder;
  for (std::size_t k = 0; k < s.ladder.size(); ++k) {
    ladder += (k ? ", " : "") + format_double(s.ladder[k].epsilon) + ":" + format_double(s.ladder[k].delta);
  }
  t.put("solver.ladder", ladder);

  t.put("penalty.kappa", cfg.penalty.kappa);
  t.put("penalty.safety", format_double(cfg.penalty.safety));
  t.put("penalty.delta", format_double(cfg.penalty.delta));
  t.put("penalty.violation_tol", format_double(cfg.penalty.violation_tol));

  const DiagnosticsSpec& d = cfg.diagnostics;
  std::string reports;
  for (std::size_t k = 0; k < d.reports.size(); ++k) reports += (k ? ", " : "") + to_string(d.reports[k]);
  t.put("diagnostics.reports", reports);
  t.put("diagnostics.seminorm_s", join_numbers(d.options.seminorm_s));
  t.put("diagnostics.seminorm_t", join_numbers(d.options.seminorm_t));
  t.put("diagnostics.seminorm_target", target_name(d.options.target));
  t.put("diagnostics.eta_width", format_double(d.options.eta_width));
  t.put("diagnostics.radii", join_numbers(d.options.radii));
  t.put("diagnostics.contact_tol", d.contact_tol ? format_double(*d.contact_tol) : "auto");

  t.put("output.directory", cfg.output.directory);
  t.put("output.field_csv", cfg.output.field_csv ? "true" : "false");
  if (!cfg.sweep.values.empty()) {
    std::string v;
    for (std::size_t k = 0; k < cfg.sweep.values.size(); ++k) v += (k ? ", " : "") + cfg.sweep.values[k];
    t.put("sweep.values", v);
  }
  std::ostringstream out;
  pt::write_ini(out, t);
  return out.str();
}

std::vector<std::string> provenance_lines(const ExperimentConfig& config) {
  std::vector<std::string> lines;
  std::istringstream in(resolved_config(config));
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

Grid build_grid(const ExperimentConfig& config) {
  const ProblemSpec& p = config.problem;
  return p.box.n == 1 ? Grid(p.box, p.nodes_x) : Grid(p.box, p.nodes_x, p.nodes_y);
}

namespace {

Coefficient make_coefficient(const std::string& text) {
  if (auto c = constant_value(text)) return Coefficient::constant(*c);
  return Coefficient::expression(parse_expression(text));
}

Field make_field(const Grid& grid, const std::vector<std::string>& exprs, const char* what) {
  const int N = static_cast<int>(exprs.size());
  Field out(grid, N);
  for (int r = 0; r < N; ++r) {
    const std::string& e = exprs[static_cast<std::size_t>(r)];
    if (is_file_expression(e)) {
      Field f = read_field(e.substr(5));
      if (f.grid() != grid) throw ShapeError(std::string(what) + ": field file '" + e.substr(5) + "' lives on another grid");
      if (f.components() != 1 && f.components() != N) {
        throw ShapeError(std::string(what) + ": field file has the wrong number of components");
      }
      const int src = f.components() == 1 ? 0 : r;
      for (int k = 0; k < grid.node_count(); ++k) out(k, r) = f(k, src);
    } else {
      const Expression fn = parse_expression(e);
      for (int k = 0; k < grid.node_count(); ++k) out(k, r) = fn(grid.node_point(k));
    }
  }
  return out;
}

}  // namespace

ObstacleProblem build_problem(const ExperimentConfig& config) {
  const ProblemSpec& p = config.problem;
  const Grid grid = build_grid(config);
  Integrand f = [&] {
    try {
      if (p.integrand == "p_power") return Integrand::p_power(p.params);
      if (p.integrand == "p_power_regularized") return Integrand::p_power_regularized(p.params);
      if (p.integrand == "double_phase") return Integrand::double_phase(p.params, make_coefficient(p.coefficient));
      if (p.integrand == "holder_modulated") return Integrand::holder_modulated(p.params, make_coefficient(p.coefficient));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("problem: ") + e.what());
    }
    throw ConfigError("problem.integrand: unknown kind '" + p.integrand + "'");
  }();
  Field psi = make_field(grid, p.psi, "psi");
  Field g = make_field(grid, p.g, "g");
  try {
    return ObstacleProblem(std::move(f), std::move(psi), std::move(g));
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
}

double parse_kappa(const std::string& text, double kappa0, double safety) {
  if (text == "auto") return safety * kappa0;
  std::string t = text;
  bool relative = false;
  if (t.size() > 2 && t.compare(t.size() - 2, 2, "k0") == 0) {
    relative = true;
    t.resize(t.size() - 2);
  }
  const double v = to_number(t, "penalty.kappa");
  if (!(v >= 0.0)) throw ConfigError("penalty.kappa must be non-negative");
  return relative ? v * kappa0 : v;
}

KappaChoice resolve_kappa(const ExperimentConfig& config, const ObstacleProblem& problem) {
  KappaChoice c;
  c.kappa0 = compute_kappa0(problem, config.solver.ladder.front().epsilon);
  c.kappa = parse_kappa(config.penalty.kappa, c.kappa0, config.penalty.safety);
  c.automatic = config.penalty.kappa == "auto";
  return c;
}

}  // namespace pqobs
