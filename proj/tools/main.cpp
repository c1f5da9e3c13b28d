#include "slowfast/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"slow-fast Langevin training and diagnostics for energy-based "
               "models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_plots = false;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--out", out_dir, "override the output directory");
  run->add_flag("--no-plots", no_plots, "skip plot emission");

  CLI11_PARSE(app, argc, argv);

  slowfast::RunOverrides overrides;
  if (seed_set) overrides.seed = seed;
  if (!out_dir.empty()) overrides.out_dir = out_dir;
  overrides.no_plots = no_plots;
  return slowfast::run_experiment(config_path, overrides, std::cout);
}
