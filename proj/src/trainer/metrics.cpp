// SPDX-License-Identifier: Apache-2.0
#include "ektf/trainer/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "ektf/error.hpp"
#include "ektf/objective/objective.hpp"

namespace ektf::trainer {

AucCounts auc_counts(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: score/label length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the average rank of a tie group spanning 1-based ranks
  // [i+1, j] is i + 1 + j, always an integer.
  AucCounts c;
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_rank = i + 1 + j;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] > 0.5) {
        ++c.positives;
        doubled_rank_sum += doubled_rank;
      }
    }
    i = j;
  }
  c.negatives = n - c.positives;
  c.doubled_u = doubled_rank_sum - c.positives * (c.positives + 1);
  return c;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  const auto c = auc_counts(scores, labels);
  if (c.positives == 0 || c.negatives == 0) {
    throw MetricError("AUC undefined: labels contain a single class (" +
                      std::to_string(c.positives) + " positives, " +
                      std::to_string(c.negatives) + " negatives)");
  }
  return static_cast<double>(c.doubled_u) /
         (2.0 * static_cast<double>(c.positives) * static_cast<double>(c.negatives));
}

double logloss(std::span<const double> probs, std::span<const double> labels) {
  if (labels.empty()) throw MetricError("logloss of an empty set");
  return objective::ctr_loss(probs, labels);
}

}  // namespace ektf::trainer
