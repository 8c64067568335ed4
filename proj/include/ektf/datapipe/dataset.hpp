// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ektf/datapipe/schema.hpp"

namespace ektf::datapipe {

/// Integer-encoded rows with binary labels. `ids` is row-major N x f.
struct EncodedDataset {
  FeatureSchema schema;
  std::vector<std::uint32_t> vocab_sizes;
  std::vector<std::uint32_t> ids;
  std::vector<std::uint8_t> labels;
  /// Generative click probability per row; only synthetic data has it.
  std::vector<double> true_ctr;

  std::size_t num_rows() const { return labels.size(); }
  std::size_t num_fields() const { return schema.num_fields(); }
  bool has_true_ctr() const { return !true_ctr.empty(); }

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {ids.data() + i * num_fields(), num_fields()};
  }

  /// Copy of the given rows, in the given order.
  EncodedDataset subset(std::span<const std::size_t> rows) const;

  double positive_rate() const;

  /// Throws DataError if any invariant is broken (id range, label values,
  /// column lengths).
  void validate() const;

  friend bool operator==(const EncodedDataset&, const EncodedDataset&) = default;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle of [0, n) cut into three disjoint parts. Train and val
/// sizes are round(n * fraction); test takes the remainder. Throws
/// ConfigError if a fraction is not positive or they do not sum to 1.
SplitIndices split_indices(std::size_t n, const SplitFractions& fractions, std::uint64_t seed);

struct DatasetSplits {
  EncodedDataset train, val, test;
};

DatasetSplits split(const EncodedDataset& dataset, const SplitFractions& fractions,
                    std::uint64_t seed);

/// One mini-batch. Immutable once produced.
struct Batch {
  std::vector<std::size_t> rows;  // source row indices
  std::vector<std::uint32_t> ids;  // B x f
  std::vector<double> labels;
  std::size_t num_fields = 0;

  std::size_t size() const { return labels.size(); }
  std::uint32_t id(std::size_t i, std::size_t field) const { return ids[i * num_fields + field]; }
};

/// Epoch iterator over a dataset. Every row appears exactly once; the last
/// batch may be short.
class Batcher {
 public:
  Batcher(const EncodedDataset& dataset, std::size_t batch_size, std::uint64_t seed,
          bool shuffle);

  std::size_t num_batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }
  Batch batch(std::size_t index) const;

 private:
  const EncodedDataset* dataset_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
};

/// Batch of consecutive rows [begin, end), used by evaluation.
Batch contiguous_batch(const EncodedDataset& dataset, std::size_t begin, std::size_t end);

}  // namespace ektf::datapipe
