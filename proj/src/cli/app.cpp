// SPDX-License-Identifier: Apache-2.0
#include "ektf/cli/app.hpp"

#include <iostream>

#include "CLI11.hpp"
#include "ektf/cli/commands.hpp"
#include "ektf/error.hpp"

namespace ektf::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const UsageError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const TrainingError*>(&e) != nullptr) return kExitTraining;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return kExitData;
  if (dynamic_cast<const MetricError*>(&e) != nullptr) return kExitData;
  if (dynamic_cast<const DimensionError*>(&e) != nullptr) return kExitData;
  return kExitData;
}

int run_app(int argc, const char* const* argv) {
  CLI::App app{"Ensemble knowledge transfer for CTR prediction"};
  app.require_subcommand(1);
  RunOptions options;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the training seed(s)");
  app.add_flag("--strict-deterministic", options.strict,
               "Omit wall-clock fields so reruns are byte-identical");

  std::string config_path;
  const auto add_config_command = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "Run configuration file")->required();
    return sub;
  };
  auto* preprocess = add_config_command("preprocess", "Build the dataset cache and summary");
  auto* train = add_config_command("train", "Train one ensemble");
  auto* sweep = add_config_command("sweep", "Sweep K x fusion x variant x seed");
  auto* ablate = add_config_command("ablate", "Run the five ablation arms per seed");

  std::vector<std::string> inputs;
  std::string report_dir = ".";
  double tolerance = 0.002;
  auto* report = app.add_subcommand("report", "Aggregate result CSVs into medians and IQRs");
  report->add_option("inputs", inputs, "sweep.csv / ablation.csv files")->required();
  report->add_option("-o,--out", report_dir, "Directory for report.json and report.csv");
  report->add_option("--tolerance", tolerance, "AUC noise allowed by the trend flag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) options.seed = seed;

  try {
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      cmd_report(paths, report_dir, tolerance);
      return kExitOk;
    }
    const RunConfig config = load_run_config(config_path);
    if (preprocess->parsed()) cmd_preprocess(config, options);
    if (train->parsed()) cmd_train(config, options);
    if (sweep->parsed()) cmd_sweep(config, options);
    if (ablate->parsed()) cmd_ablate(config, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace ektf::cli
