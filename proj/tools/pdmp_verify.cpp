// pdmp-verify: run a scenario file through one of the verification commands.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pdmpv/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulate and verify controlled piecewise deterministic Markov processes"};
  app.require_subcommand(1);

  struct Args {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
  };
  Args args;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Simulate one trajectory and write CSV, JSON and SVG"},
      {"check-invariance", "Normal-cone invariance check of the scenario set"},
      {"check-viability", "Normal-cone viability check of the scenario set"},
      {"value", "Monte Carlo value function or hitting-probability estimates"},
      {"solve-hjb", "Grid solve of the discounted Hamilton-Jacobi equation"},
      {"reach", "Reachability decision with the duality audit"},
      {"plot", "Simulate one trajectory and write only the SVG"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", args.scenario, "Scenario JSON file")->required();
    sub->add_option("--out", args.out, "Output directory")->required();
    sub->add_option("--seed", args.seed, "Override the scenario seed");
    sub->add_option("--threads", args.threads, "Worker threads (overrides PDMP_VERIFY_THREADS)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pdmpv::kExitConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return pdmpv::run_scenario(command, args.scenario, args.out, {args.seed, args.threads},
                             std::cout, std::cerr);
}
