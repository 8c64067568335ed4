// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ektf/datapipe/dataset.hpp"
#include "ektf/model/parameter.hpp"

namespace ektf::model {

/// Per-field lookup tables E_i (vocab_i x dim). embed() concatenates the
/// selected rows of every field into h.
class EmbeddingBank {
 public:
  EmbeddingBank(const std::vector<std::uint32_t>& vocab_sizes, std::size_t dim, double init_std,
                numkit::Rng& rng, const std::string& name_prefix);

  std::size_t dim() const { return dim_; }
  std::size_t num_fields() const { return tables_.size(); }
  std::size_t output_dim() const { return dim_ * tables_.size(); }

  /// B x (f * dim). Throws UsageError on an out-of-range id.
  numkit::Matrix embed(const datapipe::Batch& batch) const;

  /// Scatter-adds dh (B x f*dim) into the table gradients.
  void accumulate_grad(const datapipe::Batch& batch, const numkit::Matrix& dh);

  std::vector<Parameter>& tables() { return tables_; }
  const std::vector<Parameter>& tables() const { return tables_; }

 private:
  std::size_t dim_;
  std::vector<Parameter> tables_;
};

}  // namespace ektf::model
