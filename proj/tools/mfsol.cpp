#include <CLI11.hpp>
#include <iostream>

#include "mfsol/cli.hpp"

int main(int argc, char** argv) {
  using namespace mfsol::cli;
  CLI::App app{"mfsol: spin systems, their NLS-type counterparts and verification reports"};
  app.require_subcommand(1);

  std::string config;
  auto* sim = app.add_subcommand("simulate", "run a configured system and write checkpoints");
  sim->add_option("config", config, "INI-style run configuration")->required();

  std::string kind;
  std::vector<std::string> inputs;
  std::optional<double> tol;
  auto* ver = app.add_subcommand("verify", "run a verification pipeline");
  ver->add_option("kind", kind, "l-equivalence | zero-curvature | charges | cmp | bilinear | susy")->required();
  ver->add_option("inputs", inputs, "input grid files");
  ver->add_option("--tol", tol, "override the main tolerance");

  std::string ckpt, what;
  auto* plot = app.add_subcommand("plotdata", "print a checkpoint column as delimited text");
  plot->add_option("checkpoint", ckpt, "grid file")->required();
  plot->add_option("--what", what, "S1 | S2 | S3 | absq | charge | norm_defect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::usage;
  }
  if (*sim) return cmd_simulate(config, std::cout, std::cerr);
  if (*ver) return cmd_verify(kind, inputs, tol, std::cout, std::cerr);
  return cmd_plotdata(ckpt, what, std::cout, std::cerr);
}
