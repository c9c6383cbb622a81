#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hjm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hamilton-Jacobi solver and verifier on metric graphs"};
  std::string command;
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  std::string orientation;

  app.add_option("command", command, "solve | verify | transform | converge")
      ->required()
      ->check(CLI::IsMember({"solve", "verify", "transform", "converge"}));
  app.add_option("scenario", scenario, "Scenario file")->required();
  auto* out_opt = app.add_option("--out", out, "Output directory (overrides the scenario)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed for verification sampling");
  auto* orient_opt =
      app.add_option("--orientation", orientation, "min or max")->check(CLI::IsMember({"min", "max"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hjm::exit_code::config_error;
  }

  hjm::RunOverrides overrides;
  if (*out_opt) overrides.out = out;
  if (*seed_opt) overrides.seed = seed;
  if (*orient_opt) overrides.orientation = orientation == "max" ? hjm::Orientation::Max : hjm::Orientation::Min;
  return hjm::run(command, scenario, overrides, std::cout, std::cerr);
}
