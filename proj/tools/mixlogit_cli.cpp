#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mixlogit/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Bayes mixed logit: simulate, fit, evaluate, report"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;

  const char* names[] = {"simulate", "fit", "evaluate", "report"};
  const char* descriptions[] = {
      "generate synthetic training/validation datasets",
      "run the MCMC sampler and persist posterior draws",
      "compute TVD, LPPD, p_WAIC, WAIC for a fitted model",
      "aggregate metrics across replications into summary tables",
  };
  for (int i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(names[i], descriptions[i]);
    sub->add_option("--config", config_path, "run configuration file")
        ->required();
    sub->add_option("--jobs", jobs, "parallel jobs (replications / chains)");
    sub->add_option("--seed", seed, "override the configured seed");
  }

  CLI11_PARSE(app, argc, argv);

  mixlogit::CommandOptions opts;
  opts.jobs = jobs;
  opts.seed = seed;
  return mixlogit::run_command(app.get_subcommands().front()->get_name(),
                               config_path, opts);
}
