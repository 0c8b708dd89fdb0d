// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/baselines/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include "prism/baselines/baselines.hpp"

namespace prism::baselines {

Config resolve_config(const Config& file, const std::vector<std::string>& overrides,
                      std::optional<std::int64_t> seed) {
  const auto& entry = catalog_entry(file.get<std::string>("model.name"));
  Config config = override(entry.defaults.merged(file), overrides);
  if (config.get<std::string>("model.name") != entry.name) {
    throw ConfigError("model.name may not be changed by an override");
  }
  if (seed) config = config.with("seed", *seed);
  return config;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Runs a baseline experiment and prints its final metrics as JSON."};
  app.name("prism");
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Train and evaluate one experiment");
  std::string config_path;
  std::string workdir;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--workdir", workdir, "Directory for metrics.jsonl and checkpoints")->required();
  run->add_option("--override", overrides, "dotted.key=value, repeatable")->take_all();
  run->add_option("--seed", seed, "Root seed (default: the config's seed, else 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << (run->parsed() ? run->help() : app.help());
    return kUsage;
  }

  register_baselines();
  Config config;
  TrainerKind kind{};
  try {
    config = resolve_config(load_config(config_path), overrides, seed);
    kind = catalog_entry(config.get<std::string>("model.name")).kind;
    // Builds datasets and the model once so setup errors report as config errors.
    (void)make_experiment(config);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    const auto metrics = run_trainer(kind, config, workdir);
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [name, value] : metrics) summary[name] = value;
    out << summary.dump() << "\n";
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace prism::baselines
