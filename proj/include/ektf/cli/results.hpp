// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ektf/trainer/trainer.hpp"

namespace ektf::cli {

/// Column order of sweep.csv and ablation.csv.
inline constexpr std::string_view kResultHeader =
    "K,fusion,variant,seed,status,ensemble_logloss,ensemble_auc,best_logloss,best_auc,"
    "worst_logloss,worst_auc,gap,error";

struct ResultKey {
  std::size_t k = 0;
  std::string fusion;
  std::string variant;
  std::uint64_t seed = 0;

  friend auto operator<=>(const ResultKey&, const ResultKey&) = default;
};

/// One trained cell. `gap` is ensemble AUC minus best-student AUC; best and
/// worst are the students with the highest and lowest test AUC.
struct ResultRow {
  ResultKey key;
  std::string status = "ok";
  trainer::MetricPair ensemble;
  trainer::MetricPair best;
  trainer::MetricPair worst;
  double gap = 0.0;
  std::string error;

  bool ok() const { return status == "ok"; }
};

ResultRow make_row(ResultKey key, const trainer::Evaluation& test);

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string format_row(const ResultRow& row);
ResultRow parse_row(std::string_view line);

/// Rows of a result CSV; an absent file yields no rows. Throws DataError
/// on a foreign header or malformed row.
std::vector<ResultRow> read_results(const std::filesystem::path& path);

/// Appends one row and flushes, writing the header first for a new file.
void append_row(const std::filesystem::path& path, const ResultRow& row);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;

  double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quantiles. Throws UsageError on empty input.
Quartiles quartiles(std::vector<double> values);

struct GroupSummary {
  std::size_t k = 0;
  std::string fusion;
  std::string variant;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Quartiles ensemble_auc, ensemble_logloss, best_auc, worst_auc, gap;
};

/// One summary per (K, fusion, variant) over its successful seeds, in key
/// order. Groups without a successful run report only the failure count.
std::vector<GroupSummary> summarize(const std::vector<ResultRow>& rows);

/// Median ensemble AUC at the largest K against the smallest K of one
/// (fusion, variant) curve. The curve is non-increasing when the larger
/// ensemble does not beat the smaller one by more than the tolerance.
struct Trend {
  std::string fusion;
  std::string variant;
  std::size_t k_low = 0;
  std::size_t k_high = 0;
  double median_low = 0.0;
  double median_high = 0.0;
  bool non_increasing = false;
};

std::vector<Trend> trends(const std::vector<GroupSummary>& groups, double tolerance);

}  // namespace ektf::cli
