// kleinlab <validate|limitset|dimension|graph|harmonic|diagnose> --file F [options]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kleinlab/cli.hpp"

int main(int argc, char** argv) {
  using namespace kleinlab;
  CLI::App app{"Numerical experiments on Kleinian groups acting on S^n"};
  std::string command;
  CommandOptions opt;
  std::size_t depth = 0, samples = 0;
  double epsilon0 = 0.0;
  std::uint64_t seed = 0;
  std::string out;

  app.add_option("command", command, "validate | limitset | dimension | graph | harmonic | diagnose")
      ->required()
      ->check(CLI::IsMember({"validate", "limitset", "dimension", "graph", "harmonic", "diagnose"}));
  app.add_option("--file", opt.file, "group definition (JSON)")->required();
  auto* o_depth = app.add_option("--depth", depth, "word-length budget");
  auto* o_eps = app.add_option("--epsilon0", epsilon0, "base-cap factor in (0, 1/2]");
  auto* o_samples = app.add_option("--samples", samples, "Monte-Carlo samples");
  auto* o_seed = app.add_option("--seed", seed, "RNG seed");
  auto* o_out = app.add_option("--out", out, "CSV output (limitset, graph) or report path");
  app.add_flag("--json", opt.json, "print the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }
  if (*o_depth) opt.depth = depth;
  if (*o_eps) opt.epsilon0 = epsilon0;
  if (*o_samples) opt.samples = samples;
  if (*o_seed) opt.seed = seed;
  if (*o_out) opt.out = out;

  const CommandResult r = run_command(command, opt);
  return emit_result(command, opt, r, std::cout, std::cerr);
}
