// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ektf/cli/config.hpp"
#include "ektf/cli/results.hpp"

namespace ektf::cli {

/// Name of the environment variable that overrides output.dir.
inline constexpr const char* kOutputDirEnv = "EKTF_OUTPUT_DIR";

struct RunOptions {
  /// Omits wall-clock fields so reruns produce byte-identical files.
  bool strict = false;
  /// Replaces training.seed (train) or the seed lists (sweep, ablate).
  std::optional<std::uint64_t> seed;
};

struct PreparedData {
  datapipe::DatasetSplits splits;
  /// Set for CSV sources, which reserve id 0 for OOV.
  bool has_oov = false;
};

/// Loads dataset.cache when it exists, otherwise builds the splits from
/// the configured source.
PreparedData prepare_data(const RunConfig& config);

/// output.dir, overridden by EKTF_OUTPUT_DIR when set and non-empty.
std::filesystem::path resolve_output_dir(const RunConfig& config);

/// One ablation arm: a label and the objective it trains.
struct AblationArm {
  std::string name;
  objective::ObjectiveSpec objective;
};

/// ektf, only_kd, only_dml, wo_em, wo_all derived from the configured
/// objective; wo_all is vanilla mean fusion.
std::vector<AblationArm> ablation_arms(const objective::ObjectiveSpec& base);

/// Trains one cell and captures its test metrics. Failures become a row
/// with an error status instead of propagating.
ResultRow run_cell(const RunConfig& config, const datapipe::DatasetSplits& data, std::size_t k,
                   const objective::ObjectiveSpec& objective, const std::string& variant_label,
                   std::uint64_t seed);

/// Writes dataset.cache and preprocess.json into the output directory.
void cmd_preprocess(const RunConfig& config, const RunOptions& options);

/// Writes epochs.csv, summary.json, model.ckpt (and steps.csv when
/// output.step_log is set). On divergence writes model.last_good.ckpt and
/// rethrows.
void cmd_train(const RunConfig& config, const RunOptions& options);

/// Appends to sweep.csv, skipping keys already present.
void cmd_sweep(const RunConfig& config, const RunOptions& options);

/// Appends to ablation.csv, skipping keys already present.
void cmd_ablate(const RunConfig& config, const RunOptions& options);

/// Aggregates result CSVs into report.json and report.csv under out_dir.
void cmd_report(const std::vector<std::filesystem::path>& inputs,
                const std::filesystem::path& out_dir, double trend_tolerance);

}  // namespace ektf::cli
