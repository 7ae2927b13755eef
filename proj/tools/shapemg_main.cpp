// Batch front end: scenario-driven shape optimization experiments.
//
//   shapemg check-gradient   config.cfg [--output DIR]
//   shapemg optimize         config.cfg [--output DIR]
//   shapemg curvature-study  config.cfg [--output DIR]
//   shapemg mg-bench         config.cfg [--output DIR]
//
// Exit codes: 0 success, 1 configuration/validation failure, 2 numerical
// failure.

#include <CLI11.hpp>

#include "shapemg/scenario.hpp"

#include <functional>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"finite-element shape optimization with multigrid-preconditioned solvers"};
  app.require_subcommand(1);

  struct Command {
    std::string name;
    std::string description;
    std::function<int(const shapemg::ScenarioConfig&, std::ostream&)> run;
  };
  const std::vector<Command> commands = {
      {"check-gradient", "validate assembled shape derivatives against finite differences",
       shapemg::run_check_gradient},
      {"optimize", "run the shape optimization loop and write history/mesh artifacts",
       shapemg::run_optimize},
      {"curvature-study", "tabulate max interface curvature across refinement levels",
       shapemg::run_curvature_study},
      {"mg-bench", "tabulate PCG iteration counts across refinement levels",
       shapemg::run_mg_bench},
  };

  struct Invocation {
    std::string config_path;
    std::string output_dir;
    const Command* command = nullptr;
  } invocation;

  for (const Command& command : commands) {
    CLI::App* sub = app.add_subcommand(command.name, command.description);
    sub->add_option("config", invocation.config_path, "scenario configuration file")->required();
    sub->add_option("--output", invocation.output_dir, "output directory (overrides [output])");
    sub->callback([&invocation, &command]() { invocation.command = &command; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    shapemg::ScenarioConfig config = shapemg::parse_scenario_file(invocation.config_path);
    if (!invocation.output_dir.empty()) config.output_dir = invocation.output_dir;
    return invocation.command->run(config, std::cout);
  } catch (const shapemg::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
