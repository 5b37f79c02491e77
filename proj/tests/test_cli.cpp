#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pqobs/config.hpp"
#include "pqobs/runner.hpp"

using namespace pqobs;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("pqobs_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PQOBS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kFlat1d = R"(
[problem]
dim = 1
x_min = -1
x_max = 1
nodes = 65
p = 2
psi = constant -1
g = constant 0
)";

const char* kParabolic1d = R"(
[problem]
dim = 1
x_min = -1
x_max = 1
nodes = 129
p = 2
psi = parabolic_cap 0.5 2 0
g = constant 0
)";

const char* kCap2d = R"(
[problem]
nodes = 17
p = 2
psi = parabolic_cap 0.25 1 0.5 0.5
g = constant 0
)";

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
  const ExperimentConfig c = parse(kCap2d);
  EXPECT_EQ(c.problem.nodes_x, 17);
  EXPECT_EQ(c.problem.nodes_y, 17);
  EXPECT_EQ(c.penalty.kappa, "auto");
  EXPECT_EQ(c.solver.ladder.size(), 4u);
  const ExperimentConfig again = parse(resolved_config(c));
  EXPECT_EQ(resolved_config(again), resolved_config(c));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("[problem]\nnodes = 2\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\ncolour = blue\n"), ConfigError);
  EXPECT_THROW(parse("[extras]\na = 1\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\np = two\n"), ConfigError);
  EXPECT_THROW(parse_expression("spline 1 2 3"), ConfigError);
  EXPECT_THROW(parse_expression("affine"), ConfigError);
  EXPECT_THROW(build_problem(parse("[problem]\nintegrand = mystery\n")), ConfigError);
}

TEST(Config, Expressions) {
  EXPECT_EQ(parse_expression("constant 2.5")({0.3, 0.1}), 2.5);
  EXPECT_DOUBLE_EQ(parse_expression("affine 1 2 3")({0.5, 1.0}), 5.0);
  EXPECT_DOUBLE_EQ(parse_expression("parabolic_cap 0.25 1 0.5 0.5")({0.5, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(parse_expression("power_kink 0.5 0.25")({1.5, 0.0}), 1.0);
  EXPECT_EQ(parse_expression("power_kink 0.5 0.25")({0.2, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(parse_expression("radial_bump 2 1 0 0")({0.0, 0.0}), 2.0);
  EXPECT_FALSE(expression_catalog().empty());
}

TEST(Config, KappaParsing) {
  EXPECT_EQ(parse_kappa("auto", 4.0, 2.0), 8.0);
  EXPECT_EQ(parse_kappa("0.25k0", 4.0, 2.0), 1.0);
  EXPECT_EQ(parse_kappa("3.5", 4.0, 2.0), 3.5);
  EXPECT_THROW(parse_kappa("lots", 4.0, 2.0), ConfigError);
}

TEST(RunSolve, FlatObstacleGivesZero) {
  TempDir dir;
  std::ostringstream log;
  const SolveOutcome out = run_solve(parse(kFlat1d), dir.str(), log);
  EXPECT_EQ(out.exit_code, kExitOk) << log.str();
  ASSERT_TRUE(out.result.has_value());
  for (double v : out.result->u.values()) EXPECT_LE(std::abs(v), 1e-10);
  for (const char* f : {"solution.pqfield", "solution.csv", "ladder_trace.csv", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string trace = slurp(dir / "ladder_trace.csv");
  EXPECT_EQ(trace.rfind("# resolved configuration", 0), 0u);
  EXPECT_NE(trace.find("rung,epsilon,delta,kappa,energy,violation,w1q_norm,grad_norm,iterations,converged"),
            std::string::npos);
}

TEST(RunSolve, ParabolicObstacleHasContact) {
  TempDir dir;
  std::ostringstream log;
  const SolveOutcome out = run_solve(parse(kParabolic1d), dir.str(), log);
  EXPECT_EQ(out.exit_code, kExitOk) << log.str();
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("contact_set: "), std::string::npos);
  EXPECT_EQ(summary.find("contact_set: empty"), std::string::npos);
  EXPECT_NE(summary.find("kappa0: "), std::string::npos);
  EXPECT_NE(summary.find("gap_condition: satisfied"), std::string::npos);
}

TEST(RunSolve, GapViolationIsAWarning) {
  TempDir dir;
  std::ostringstream log;
  ExperimentConfig c = parse(std::string(kCap2d) + "q = 3.5\nintegrand = double_phase\n");
  c.solver.ladder = {Rung{1e-1, 1e-1}, Rung{1e-2, 1e-2}};
  const SolveOutcome out = run_solve(c, dir.str(), log);
  EXPECT_EQ(out.exit_code, kExitOk) << log.str();
  EXPECT_NE(slurp(dir / "summary.txt").find("warning: gap condition violated"), std::string::npos);
}

TEST(RunSweep, KappaSweepViolationIsNonIncreasing) {
  TempDir dir;
  std::ostringstream log;
  const SweepOutcome out =
      run_sweep(parse(kCap2d), "kappa", {"0.25k0", "0.5k0", "1k0", "2k0", "4k0"}, dir.str(), log);
  ASSERT_EQ(out.rows.size(), 5u);
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    EXPECT_GT(out.rows[i].value, out.rows[i - 1].value);
    EXPECT_LE(out.rows[i].violation, out.rows[i - 1].violation);
  }
  const std::string csv = slurp(dir / "sweep_kappa.csv");
  EXPECT_NE(csv.find("index,parameter,value,energy,violation,w1q_norm,seminorm,iterations,status,wall_time"),
            std::string::npos);
}

TEST(RunSweep, ValueExpansion) {
  const auto v = expand_sweep_values("delta", {"geom:1e-1:1e-3:3"}, 0.0);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[0], 1e-1);
  EXPECT_NEAR(v[1], 1e-2, 1e-15);
  EXPECT_DOUBLE_EQ(v[2], 1e-3);
  EXPECT_EQ(expand_sweep_values("kappa", {"2k0"}, 4.0), std::vector<double>{8.0});
  EXPECT_ANY_THROW(expand_sweep_values("delta", {"2k0"}, 4.0));
}

TEST(RunDiagnose, ConstantFieldAndSolverOutput) {
  TempDir dir;
  std::ostringstream log;
  const ExperimentConfig c = parse(kCap2d);
  const SolveOutcome solved = run_solve(c, dir.str(), log);
  ASSERT_EQ(solved.exit_code, kExitOk) << log.str();

  const DiagnoseOutcome d = run_diagnose(c, dir / "solution.pqfield", dir / "diag", log);
  ASSERT_EQ(d.exit_code, kExitOk) << log.str();
  EXPECT_NEAR(d.report->w1q_norm, solved.result->ladder_trace.back().w1q_norm, 1e-12);
  EXPECT_TRUE(fs::exists(dir / "diag/diagnostics.csv"));

  write_field(dir / "const.pqfield", Field(build_grid(c), 1, 0.1));
  const DiagnoseOutcome k = run_diagnose(c, dir / "const.pqfield", dir / "diag2", log);
  ASSERT_EQ(k.exit_code, kExitOk);
  for (const auto& [key, value] : k.report->nikolskii) EXPECT_EQ(value, 0.0);
  EXPECT_NEAR(k.report->violation, 0.15, 1e-15);

  write_field(dir / "wrong.pqfield", Field(Grid::square(0, 1, 9), 1));
  EXPECT_EQ(run_diagnose(c, dir / "wrong.pqfield", dir / "diag3", log).exit_code, kExitConfig);
}

TEST(RunSolve, DeterministicArtifacts) {
  TempDir dir;
  std::ostringstream log;
  const ExperimentConfig c = parse(kCap2d);
  run_solve(c, dir / "a", log);
  run_solve(c, dir / "b", log);
  EXPECT_EQ(slurp(dir / "a/ladder_trace.csv"), slurp(dir / "b/ladder_trace.csv"));
  EXPECT_EQ(slurp(dir / "a/solution.pqfield"), slurp(dir / "b/solution.pqfield"));
}

TEST(OutputDir, Precedence) {
  ExperimentConfig c = parse(kCap2d);
  c.output.directory = "from_config";
  ::unsetenv("PQOBS_OUTPUT_DIR");
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), "from_config");
  ::setenv("PQOBS_OUTPUT_DIR", "from_env", 1);
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), "from_env");
  EXPECT_EQ(resolve_output_dir(c, std::string("from_flag")), "from_flag");
  ::unsetenv("PQOBS_OUTPUT_DIR");
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  write(dir / "flat.ini", kFlat1d);
  write(dir / "bad.ini", "[problem]\nnodes = two\n");
  EXPECT_EQ(run_cli("solve " + (dir / "flat.ini") + " -o " + (dir / "out")), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "out/solution.pqfield"));
  EXPECT_EQ(run_cli("solve " + (dir / "bad.ini")), kExitConfig);
  EXPECT_EQ(run_cli("solve " + (dir / "missing.ini")), kExitConfig);
  EXPECT_EQ(run_cli("sweep " + (dir / "flat.ini") + " --axis colour"), kExitConfig);
  EXPECT_EQ(run_cli("frobnicate"), kExitConfig);
}

TEST(Cli, EnvironmentOverridesConfigDirectory) {
  TempDir dir;
  write(dir / "flat.ini", kFlat1d);
  const std::string env = "PQOBS_OUTPUT_DIR=" + (dir / "env_out") + " ";
  const int status = std::system((env + PQOBS_CLI + " solve " + (dir / "flat.ini") + " > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(status), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "env_out/summary.txt"));
}

TEST(Cli, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(PQOBS_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(build_problem(load_config(entry.path().string()))) << entry.path();
  }
}
