// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/dataset.hpp"

#include <cmath>
#include <numeric>

#include "ektf/error.hpp"
#include "ektf/numkit/rng.hpp"

namespace ektf::datapipe {

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> rows) const {
  EncodedDataset out;
  out.schema = schema;
  out.vocab_sizes = vocab_sizes;
  const std::size_t f = num_fields();
  out.ids.reserve(rows.size() * f);
  out.labels.reserve(rows.size());
  if (has_true_ctr()) out.true_ctr.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= num_rows()) throw UsageError("subset row index out of range");
    const auto src = row(r);
    out.ids.insert(out.ids.end(), src.begin(), src.end());
    out.labels.push_back(labels[r]);
    if (has_true_ctr()) out.true_ctr.push_back(true_ctr[r]);
  }
  return out;
}

double EncodedDataset::positive_rate() const {
  if (labels.empty()) return 0.0;
  std::size_t pos = 0;
  for (auto y : labels) pos += y;
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

void EncodedDataset::validate() const {
  const std::size_t f = num_fields();
  if (vocab_sizes.size() != f) throw DataError("vocab size count does not match field count");
  if (ids.size() != labels.size() * f) throw DataError("id matrix does not match row count");
  if (!true_ctr.empty() && true_ctr.size() != labels.size()) {
    throw DataError("true_ctr length does not match row count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw DataError("label at row " + std::to_string(i) + " is not 0/1");
    for (std::size_t j = 0; j < f; ++j) {
      if (ids[i * f + j] >= vocab_sizes[j]) {
        throw DataError("id out of range at row " + std::to_string(i) + ", field '" +
                        schema.fields[j].name + "'");
      }
    }
  }
}

SplitIndices split_indices(std::size_t n, const SplitFractions& fr, std::uint64_t seed) {
  if (!(fr.train > 0.0 && fr.val > 0.0 && fr.test > 0.0)) {
    throw ConfigError("split fractions must all be positive");
  }
  if (std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  numkit::Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto dn = static_cast<double>(n);
  std::size_t n_train = static_cast<std::size_t>(std::llround(dn * fr.train));
  std::size_t n_val = static_cast<std::size_t>(std::llround(dn * fr.val));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return out;
}

DatasetSplits split(const EncodedDataset& dataset, const SplitFractions& fractions,
                    std::uint64_t seed) {
  const auto idx = split_indices(dataset.num_rows(), fractions, seed);
  return {dataset.subset(idx.train), dataset.subset(idx.val), dataset.subset(idx.test)};
}

Batcher::Batcher(const EncodedDataset& dataset, std::size_t batch_size, std::uint64_t seed,
                 bool shuffle)
    : dataset_(&dataset), batch_size_(batch_size), order_(dataset.num_rows()) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (shuffle) {
    numkit::Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order_));
  }
}

namespace {

Batch gather(const EncodedDataset& dataset, std::span<const std::size_t> rows) {
  Batch b;
  b.num_fields = dataset.num_fields();
  b.rows.assign(rows.begin(), rows.end());
  b.ids.reserve(rows.size() * b.num_fields);
  b.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto src = dataset.row(r);
    b.ids.insert(b.ids.end(), src.begin(), src.end());
    b.labels.push_back(static_cast<double>(dataset.labels[r]));
  }
  return b;
}

}  // namespace

Batch Batcher::batch(std::size_t index) const {
  const std::size_t begin = index * batch_size_;
  if (begin >= order_.size()) throw UsageError("batch index out of range");
  const std::size_t end = std::min(order_.size(), begin + batch_size_);
  return gather(*dataset_, std::span(order_).subspan(begin, end - begin));
}

Batch contiguous_batch(const EncodedDataset& dataset, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return gather(dataset, rows);
}

}  // namespace ektf::datapipe
