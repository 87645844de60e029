// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "CLI11.hpp"
#include "qtl/cli.hpp"
#include "qtl/errors.hpp"

int main(int argc, char **argv) {
  using namespace qtl::cli;
  RunConfig cfg;
  CLI::App app{"Model checker for quantum programs"};
  app.require_subcommand(1);

  auto common = [&](CLI::App *sub) {
    sub->add_option("input", cfg.input, "Program JSON or .qw source")->required();
    sub->add_option("--tolerance", cfg.tolerance, "Numeric tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--period-bound", cfg.period_bound, "Largest period tried")
        ->check(CLI::Range(std::size_t(1), std::size_t(1) << 20));
    sub->add_flag("--json", cfg.json, "Machine-readable output");
  };

  CLI::App *check = app.add_subcommand("check", "Decide a formula on a program");
  common(check);
  check->add_option("--atoms", cfg.atoms, "Atoms JSON");
  check->add_option("-f,--formula", cfg.formula, "Formula text")->required();
  check->add_option("--depth", cfg.depth, "Support-graph oracle depth");

  CLI::App *comp = app.add_subcommand("compile", "Compile a .qw source to program JSON");
  common(comp);
  comp->add_flag("--normal-form", cfg.normal_form, "Emit the single-loop normal form");
  comp->add_option("-o", cfg.output, "Output file");

  CLI::App *reach = app.add_subcommand("reach", "Reachability map and expected running time");
  common(reach);

  CLI::App *sim = app.add_subcommand("simulate", "Print a trace of the program");
  common(sim);
  sim->add_option("--atoms", cfg.atoms, "Atoms JSON");
  sim->add_option("--depth", cfg.steps, "Number of steps");
  sim->add_option("--schedule", cfg.schedule,
                  "Comma-separated action indices, or 'enumerate'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }
  try {
    cfg.budget = budget_from_env();
  } catch (const qtl::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return run(cfg, std::cout, std::cerr);
}
