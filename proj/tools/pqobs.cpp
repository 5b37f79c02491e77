// Command-line front end: solve, sweep and diagnose experiments from an INI config.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pqobs/config.hpp"
#include "pqobs/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Penalty solver and diagnostics for obstacle problems with (p,q)-growth"};
  app.require_subcommand(1);

  std::string config_path, field_path, axis;
  std::vector<std::string> values;
  std::string output_dir;

  auto* solve = app.add_subcommand("solve", "Run the continuation ladder and write the solution");
  solve->add_option("config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Solve once per value of one parameter and tabulate");
  sweep->add_option("config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "kappa, delta, epsilon, resolution or q")
      ->required()
      ->check(CLI::IsMember(pqobs::sweep_axes()));
  sweep->add_option("--values", values, "Values, e.g. 0.5 1 2, 2k0 (kappa) or geom:1e-1:1e-4:4");

  auto* diag = app.add_subcommand("diagnose", "Evaluate diagnostics on a field file");
  diag->add_option("config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  diag->add_option("field", field_path, "Field file (.pqfield)")->required()->check(CLI::ExistingFile);

  for (auto* sub : {solve, sweep, diag}) {
    sub->add_option("-o,--output-dir", output_dir, "Output directory (overrides $PQOBS_OUTPUT_DIR and the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pqobs::kExitConfig;
  }

  pqobs::ExperimentConfig config;
  try {
    config = pqobs::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pqobs::kExitConfig;
  }
  const std::string dir =
      pqobs::resolve_output_dir(config, output_dir.empty() ? std::nullopt : std::optional<std::string>(output_dir));

  if (solve->parsed()) return pqobs::run_solve(config, dir, std::cout).exit_code;
  if (sweep->parsed()) return pqobs::run_sweep(config, axis, values, dir, std::cout).exit_code;
  return pqobs::run_diagnose(config, field_path, dir, std::cout).exit_code;
}
