// SPDX-License-Identifier: Apache-2.0
#include "ektf/model/embedding.hpp"

#include <algorithm>

#include "ektf/error.hpp"

namespace ektf::model {

numkit::Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev,
                             numkit::Rng& rng) {
  numkit::Matrix m(rows, cols);
  for (auto& v : m.flat()) v = stddev * rng.normal();
  return m;
}

EmbeddingBank::EmbeddingBank(const std::vector<std::uint32_t>& vocab_sizes, std::size_t dim,
                             double init_std, numkit::Rng& rng, const std::string& name_prefix)
    : dim_(dim) {
  if (dim == 0) throw ConfigError("embedding dim must be at least 1");
  tables_.reserve(vocab_sizes.size());
  for (std::size_t j = 0; j < vocab_sizes.size(); ++j) {
    tables_.emplace_back(name_prefix + "emb." + std::to_string(j),
                         normal_matrix(vocab_sizes[j], dim, init_std, rng));
  }
}

numkit::Matrix EmbeddingBank::embed(const datapipe::Batch& batch) const {
  if (batch.num_fields != tables_.size()) {
    throw UsageError("batch has " + std::to_string(batch.num_fields) + " fields, bank has " +
                     std::to_string(tables_.size()));
  }
  numkit::Matrix h(batch.size(), output_dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double* out = h.data() + i * output_dim();
    for (std::size_t j = 0; j < tables_.size(); ++j) {
      const auto id = batch.id(i, j);
      const auto& table = tables_[j].value;
      if (id >= table.rows()) {
        throw UsageError("id " + std::to_string(id) + " out of range for field " +
                         std::to_string(j) + " (vocab " + std::to_string(table.rows()) + ")");
      }
      const auto src = table.row(id);
      std::copy(src.begin(), src.end(), out + j * dim_);
    }
  }
  return h;
}

void EmbeddingBank::accumulate_grad(const datapipe::Batch& batch, const numkit::Matrix& dh) {
  if (dh.rows() != batch.size() || dh.cols() != output_dim()) {
    throw DimensionError("embedding gradient has shape " + dh.shape_string());
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* g = dh.data() + i * output_dim();
    for (std::size_t j = 0; j < tables_.size(); ++j) {
      auto dst = tables_[j].grad.row(batch.id(i, j));
      for (std::size_t c = 0; c < dim_; ++c) dst[c] += g[j * dim_ + c];
    }
  }
}

}  // namespace ektf::model
