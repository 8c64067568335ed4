// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ektf/datapipe/dataset.hpp"

namespace ektf::datapipe {

struct SyntheticConfig {
  std::size_t num_rows = 10000;
  std::size_t num_fields = 8;
  /// One entry per field, or a single entry shared by every field.
  std::vector<std::uint32_t> vocab_sizes = {100};
  /// Scale of the pairwise terms; 0 disables them.
  double interaction_strength = 1.0;
  std::size_t num_pairs = 8;
  std::size_t interaction_rank = 4;
  /// Standard deviation of per-value field biases.
  double bias_scale = 0.5;
  double base_logit = 0.0;
};

/// Coefficients of the generating process, kept for diagnostics.
struct SyntheticModel {
  double base_logit = 0.0;
  double interaction_strength = 0.0;
  std::vector<std::vector<double>> field_bias;  // [field][id]
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// factors[field][id * rank + r]
  std::vector<std::vector<double>> factors;
  std::size_t rank = 0;

  /// Latent logit of one encoded row.
  double logit(std::span<const std::uint32_t> row) const;
};

struct SyntheticData {
  EncodedDataset dataset;
  SyntheticModel model;
};

/// Uniform ids per field; logit = base + sum of field biases +
/// strength * sum over a random sparse set of field pairs of <u_i, u_j>;
/// true_ctr = sigmoid(logit); labels ~ Bernoulli(true_ctr).
SyntheticData synthesize(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace ektf::datapipe
