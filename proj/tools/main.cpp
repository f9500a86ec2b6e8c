// Command line driver. All real work lives in the core library; this file
// only parses flags and maps subcommands onto it.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmilasso/commands.hpp"

namespace {

struct SubCommand {
  CLI::App* app = nullptr;
  int (*run)(const bmilasso::CommandOptions&) = nullptr;
  bmilasso::CommandOptions options;
  std::uint64_t seed = 0;
  CLI::Option* seed_option = nullptr;
};

void add_common_flags(SubCommand& sub) {
  sub.app->add_option("--config", sub.options.config_path,
                      "JSON run configuration")
      ->required();
  sub.app->add_option("--out", sub.options.out_dir,
                      "directory for output artifacts");
  sub.seed_option =
      sub.app->add_option("--seed", sub.seed, "override the config seed");
  sub.app->add_option("--threads", sub.options.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  sub.app->add_flag("--strict", sub.options.strict,
                    "treat a failed convergence gate as an error (exit 3)");
  sub.app->add_flag("--dry-run", sub.options.dry_run,
                    "print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian variable selection for multiply imputed data"};
  app.require_subcommand(1);

  const std::pair<const char*, const char*> names[] = {
      {"simulate", "run a simulation study and report selection metrics"},
      {"impute", "fill a dataset with missing entries by chained equations"},
      {"fit", "draw from a model posterior on an imputed stack"},
      {"select", "fit a model and apply a selection rule"},
      {"tune", "optimize spike prior hyperparameters against the BIC"},
      {"report", "rebuild summary tables from a replication log"}};
  int (*runners[])(const bmilasso::CommandOptions&) = {
      bmilasso::cmd_simulate, bmilasso::cmd_impute,  bmilasso::cmd_fit,
      bmilasso::cmd_select,   bmilasso::cmd_tune,    bmilasso::cmd_report};

  std::vector<std::unique_ptr<SubCommand>> commands;
  for (std::size_t i = 0; i < std::size(names); ++i) {
    auto sub = std::make_unique<SubCommand>();
    sub->app = app.add_subcommand(names[i].first, names[i].second);
    sub->run = runners[i];
    add_common_flags(*sub);
    commands.push_back(std::move(sub));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bmilasso::kExitConfig;
  }

  for (const auto& sub : commands) {
    if (!sub->app->parsed()) continue;
    if (sub->seed_option->count() > 0) sub->options.seed = sub->seed;
    return sub->run(sub->options);
  }
  return bmilasso::kExitConfig;
}
