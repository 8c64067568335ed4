// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ektf/datapipe/dataset.hpp"
#include "ektf/model/embedding.hpp"
#include "ektf/model/student.hpp"

namespace ektf::model {

enum class EmbeddingSharing { kPrivate, kShared };

std::string_view to_string(EmbeddingSharing sharing);
EmbeddingSharing parse_sharing(std::string_view text);

struct ModelConfig {
  /// One entry per student; its size is K.
  std::vector<StudentKind> kinds = {StudentKind::kMlp};
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t cross_layers = 2;
  EmbeddingSharing sharing = EmbeddingSharing::kPrivate;
  double init_std = 0.01;
  std::uint64_t seed = 0;
  /// Seeds every student (and private bank) with seed ^ 1 instead of
  /// seed ^ k, so all students start identical.
  bool identical_init = false;
  /// Adds the learned K-logit combiner used by concat fusion.
  bool concat_head = false;

  std::size_t num_students() const { return kinds.size(); }
};

/// Learned linear combiner over the K student logits: z = sum_k w_k z_k + c.
struct ConcatHead {
  Parameter weight;  // K x 1, initialised to 1/K
  Parameter bias;    // 1 x 1
};

struct EnsembleForward {
  numkit::Matrix logits;  // K x B
  numkit::Matrix probs;   // K x B
  std::vector<numkit::Matrix> embedded;  // one h per bank
  std::vector<ForwardTrace> traces;      // one per student
};

/// K students with their embedding banks (one shared or one per student).
class EnsembleModel {
 public:
  EnsembleModel(const ModelConfig& config, const std::vector<std::uint32_t>& vocab_sizes);
  EnsembleModel(const EnsembleModel& other);
  EnsembleModel& operator=(const EnsembleModel& other);
  EnsembleModel(EnsembleModel&&) noexcept = default;
  EnsembleModel& operator=(EnsembleModel&&) noexcept = default;

  std::size_t num_students() const { return students_.size(); }
  const ModelConfig& config() const { return config_; }

  EnsembleForward forward(const datapipe::Batch& batch) const;

  /// Routes dL/dlogit (K x B) through every student and into the banks.
  /// Gradients accumulate; call zero_grad() between steps.
  void backward(const datapipe::Batch& batch, EnsembleForward& fwd,
                const numkit::Matrix& dlogits);

  void zero_grad();
  /// Adam step on every parameter, in parameters() order.
  void step();

  /// Stable order: banks, students, then the concat head.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  /// Parameter values only (optimizer state excluded).
  std::vector<numkit::Matrix> snapshot() const;
  void restore(const std::vector<numkit::Matrix>& values);

  void set_learning_rate(double lr);

  ConcatHead* concat_head() { return head_ ? head_.get() : nullptr; }
  const ConcatHead* concat_head() const { return head_ ? head_.get() : nullptr; }
  StudentNet& student(std::size_t k) { return *students_[k]; }
  EmbeddingBank& bank_of(std::size_t k) { return banks_[bank_index(k)]; }

 private:
  std::size_t bank_index(std::size_t k) const {
    return config_.sharing == EmbeddingSharing::kShared ? 0 : k;
  }

  ModelConfig config_;
  std::vector<EmbeddingBank> banks_;
  std::vector<std::unique_ptr<StudentNet>> students_;
  std::unique_ptr<ConcatHead> head_;
};

}  // namespace ektf::model
