#include <iostream>

#include "CLI11.hpp"
#include "pilotwave/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pilot-wave trajectory and ensemble simulator"};
  app.require_subcommand(1);

  pilotwave::RunArgs run;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Evolve a scenario and write trajectories, report and manifest");
  run_cmd->add_option("scenario", run.scenario, "Scenario file or bundled name")->required();
  run_cmd->add_option("-o,--output", run.output, "Output directory (default run_<name>)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the ensemble seed");
  run_cmd->add_option("--threads", run.threads, "Worker threads for trajectories")->check(CLI::PositiveNumber);
  run_cmd->add_option("--override", run.overrides, "section.key=value, repeatable");

  std::string validate_target;
  std::vector<std::string> validate_overrides;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario without running it");
  validate_cmd->add_option("scenario", validate_target, "Scenario file or bundled name")->required();
  validate_cmd->add_option("--override", validate_overrides, "section.key=value, repeatable");

  auto* list_cmd = app.add_subcommand("list", "List bundled scenarios");

  pilotwave::ExportArgs exp;
  std::size_t trajectory = 0;
  auto* export_cmd = app.add_subcommand("export", "Reconstruct fields or extract a trajectory from a run");
  export_cmd->add_option("run_dir", exp.run_dir, "Run output directory")->required();
  export_cmd->add_option("kind", exp.kind, "A, B, E_T or trajectory")->required();
  export_cmd->add_option("-t,--time", exp.time, "Time of the snapshot")->required();
  export_cmd->add_option("-o,--output", exp.output, "Output file");
  auto* traj_opt = export_cmd->add_option("--trajectory", trajectory, "Recorded trajectory index");
  export_cmd->add_option("--lattice", exp.lattice, "Lattice points per axis")->check(CLI::Range(2, 512));
  export_cmd->add_option("--format", exp.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  std::string fixture, check_output;
  std::size_t check_threads = 1;
  auto* check_cmd = app.add_subcommand("check", "Run a fixture's scenario and check its properties");
  check_cmd->add_option("fixture", fixture, "Fixture file or bundled name")->required();
  check_cmd->add_option("-o,--output", check_output, "Output directory (default check_<name>)");
  check_cmd->add_option("--threads", check_threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : pilotwave::kExitFailure;
  }

  if (run_cmd->parsed()) {
    if (*seed_opt) run.seed = seed;
    return pilotwave::cmd_run(run, std::cout, std::cerr);
  }
  if (validate_cmd->parsed()) return pilotwave::cmd_validate(validate_target, validate_overrides, std::cout, std::cerr);
  if (list_cmd->parsed()) return pilotwave::cmd_list_scenarios(std::cout, std::cerr);
  if (export_cmd->parsed()) {
    if (*traj_opt) exp.trajectory = trajectory;
    return pilotwave::cmd_export(exp, std::cout, std::cerr);
  }
  if (check_cmd->parsed()) return pilotwave::cmd_check(fixture, check_output, check_threads, std::cout, std::cerr);
  return pilotwave::kExitFailure;
}
