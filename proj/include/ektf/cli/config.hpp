// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ektf/datapipe/csv.hpp"
#include "ektf/datapipe/dataset.hpp"
#include "ektf/datapipe/synthetic.hpp"
#include "ektf/trainer/trainer.hpp"

namespace ektf::cli {

enum class DataSource { kSynthetic, kCsv };

struct DatasetSection {
  DataSource source = DataSource::kSynthetic;
  std::filesystem::path path;
  std::vector<datapipe::FieldSpec> fields;
  std::string label = "label";
  datapipe::CsvOptions csv;
  std::uint32_t min_count = 10;
  datapipe::SplitFractions split;
  std::uint64_t split_seed = 2024;
  /// Optional prebuilt cache; used instead of the source when it exists.
  std::filesystem::path cache;
};

struct SweepSection {
  std::vector<std::size_t> k = {1, 3, 6};
  std::vector<objective::Fusion> fusion = {objective::Fusion::kMean};
  std::vector<objective::Variant> variant = {objective::Variant::kVanilla,
                                             objective::Variant::kEktf};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct AblateSection {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

/// Parsed run configuration. `train.model.kinds` holds the configured kind
/// list, cycled over the K students by `train_config_for`.
struct RunConfig {
  DatasetSection dataset;
  datapipe::SyntheticConfig synthetic;
  std::uint64_t synthetic_seed = 1;
  std::size_t num_students = 3;
  trainer::TrainConfig train;
  std::filesystem::path output_dir = "ektf_out";
  bool step_log = false;
  SweepSection sweep;
  AblateSection ablate;
};

/// Parses the sectioned key-value format. Unknown sections or keys,
/// duplicates, and malformed values raise ConfigError with the line number.
RunConfig parse_run_config(std::string_view text, std::string_view origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Concrete training configuration for K students under the given
/// objective settings. Concat fusion enables the concat head.
trainer::TrainConfig train_config_for(const RunConfig& config, std::size_t k,
                                      const objective::ObjectiveSpec& objective,
                                      std::uint64_t seed);

/// Every key the parser accepts, as "section.key".
std::vector<std::string> known_keys();

}  // namespace ektf::cli
