#include <string>

#include <CLI11.hpp>

#include "galds/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GALDS surrogate pipeline: data generation, training, inference, evaluation,"
               " benchmarking"};
  app.require_subcommand(1);

  std::string config;
  galds::CliOverrides overrides;
  uint64_t seed = 0;
  int32_t workers = 0;

  const char* names[] = {"gen-data", "train", "infer", "eval", "bench"};
  const char* blurbs[] = {"simulate a dataset of field series from the config",
                          "run the staged training pipeline",
                          "run the surrogate on one skeleton",
                          "score a checkpoint against stored oracle series",
                          "time the surrogate against the reference solver"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", config, "TOML config file")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--workers", workers, "override the worker count");
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) overrides.seed = seed;
  if (sub->count("--workers")) overrides.workers = workers;
  return galds::run_command(sub->get_name(), config, overrides);
}
