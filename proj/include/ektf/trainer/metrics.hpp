// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

namespace ektf::trainer {

struct MetricPair {
  double logloss = 0.0;
  double auc = 0.0;

  friend bool operator==(const MetricPair&, const MetricPair&) = default;
};

/// Mann-Whitney counts: `doubled_u` is twice the number of correctly
/// ordered positive/negative pairs plus the number of tied pairs, so
/// AUC = doubled_u / (2 * positives * negatives) with no rounding in the
/// count itself.
struct AucCounts {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t doubled_u = 0;
};

/// Rank-based counts with average ranks for tied scores. Labels are
/// treated as positive when > 0.5.
AucCounts auc_counts(std::span<const double> scores, std::span<const double> labels);

/// Throws MetricError if labels contain a single class.
double auc(std::span<const double> scores, std::span<const double> labels);

/// Mean clamped binary cross-entropy (the CTR loss).
double logloss(std::span<const double> probs, std::span<const double> labels);

}  // namespace ektf::trainer
