// SPDX-License-Identifier: Apache-2.0
#include "ektf/model/ensemble.hpp"

#include "ektf/error.hpp"
#include "ektf/numkit/kernels.hpp"

namespace ektf::model {

using numkit::Matrix;

std::string_view to_string(EmbeddingSharing sharing) {
  return sharing == EmbeddingSharing::kShared ? "shared" : "private";
}

EmbeddingSharing parse_sharing(std::string_view text) {
  if (text == "private") return EmbeddingSharing::kPrivate;
  if (text == "shared") return EmbeddingSharing::kShared;
  throw ConfigError("unknown embedding sharing '" + std::string(text) + "'");
}

EnsembleModel::EnsembleModel(const ModelConfig& config,
                             const std::vector<std::uint32_t>& vocab_sizes)
    : config_(config) {
  const std::size_t k_count = config.num_students();
  if (k_count == 0) throw ConfigError("at least one student is required");
  if (vocab_sizes.empty()) throw ConfigError("at least one feature field is required");

  if (config.sharing == EmbeddingSharing::kShared) {
    numkit::Rng rng(config.seed);
    banks_.emplace_back(vocab_sizes, config.embedding_dim, config.init_std, rng, "shared.");
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    // Students are numbered 1..K; student k draws from seed ^ k.
    const std::uint64_t student_seed = config.seed ^ (config.identical_init ? 1 : k + 1);
    numkit::Rng rng(student_seed);
    const std::string prefix = "s" + std::to_string(k + 1) + ".";
    if (config.sharing == EmbeddingSharing::kPrivate) {
      banks_.emplace_back(vocab_sizes, config.embedding_dim, config.init_std, rng, prefix);
    }
    StudentConfig sc;
    sc.kind = config.kinds[k];
    sc.input_dim = config.embedding_dim * vocab_sizes.size();
    sc.hidden = config.hidden;
    sc.cross_layers = config.cross_layers;
    sc.init_std = config.init_std;
    students_.push_back(make_student(sc, rng, prefix));
  }
  if (config.concat_head) {
    head_ = std::make_unique<ConcatHead>(
        ConcatHead{Parameter("concat.w", Matrix(k_count, 1, 1.0 / static_cast<double>(k_count))),
                   Parameter("concat.b", Matrix(1, 1))});
  }
}

EnsembleModel::EnsembleModel(const EnsembleModel& other)
    : config_(other.config_), banks_(other.banks_) {
  for (const auto& s : other.students_) students_.push_back(s->clone());
  if (other.head_) head_ = std::make_unique<ConcatHead>(*other.head_);
}

EnsembleModel& EnsembleModel::operator=(const EnsembleModel& other) {
  if (this != &other) {
    EnsembleModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

EnsembleForward EnsembleModel::forward(const datapipe::Batch& batch) const {
  EnsembleForward out;
  const std::size_t k_count = num_students();
  out.logits = Matrix(k_count, batch.size());
  out.probs = Matrix(k_count, batch.size());
  out.embedded.reserve(banks_.size());
  for (const auto& bank : banks_) out.embedded.push_back(bank.embed(batch));
  out.traces.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    StudentOutput so = students_[k]->forward(out.embedded[bank_index(k)]);
    std::copy(so.logits.begin(), so.logits.end(), out.logits.row(k).begin());
    std::copy(so.probs.begin(), so.probs.end(), out.probs.row(k).begin());
    out.traces.push_back(std::move(so.trace));
  }
  return out;
}

void EnsembleModel::backward(const datapipe::Batch& batch, EnsembleForward& fwd,
                             const Matrix& dlogits) {
  if (dlogits.rows() != num_students() || dlogits.cols() != batch.size()) {
    throw DimensionError("dlogits has shape " + dlogits.shape_string());
  }
  if (config_.sharing == EmbeddingSharing::kShared) {
    Matrix dh(batch.size(), banks_[0].output_dim());
    for (std::size_t k = 0; k < num_students(); ++k) {
      const Matrix g = students_[k]->backward(fwd.traces[k], dlogits.row(k));
      auto acc = dh.flat();
      auto src = g.flat();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
    banks_[0].accumulate_grad(batch, dh);
  } else {
    for (std::size_t k = 0; k < num_students(); ++k) {
      banks_[k].accumulate_grad(batch, students_[k]->backward(fwd.traces[k], dlogits.row(k)));
    }
  }
}

std::vector<Parameter*> EnsembleModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& bank : banks_) {
    for (auto& t : bank.tables()) out.push_back(&t);
  }
  for (auto& s : students_) {
    for (auto* p : s->parameters()) out.push_back(p);
  }
  if (head_) {
    out.push_back(&head_->weight);
    out.push_back(&head_->bias);
  }
  return out;
}

std::vector<const Parameter*> EnsembleModel::parameters() const {
  auto mutable_params = const_cast<EnsembleModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void EnsembleModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void EnsembleModel::step() {
  for (auto* p : parameters()) p->step();
}

std::vector<Matrix> EnsembleModel::snapshot() const {
  std::vector<Matrix> out;
  for (const auto* p : parameters()) out.push_back(p->value);
  return out;
}

void EnsembleModel::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw UsageError("snapshot does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    numkit::require_same_shape(params[i]->value, values[i], "restore");
    params[i]->value = values[i];
  }
}

void EnsembleModel::set_learning_rate(double lr) {
  for (auto* p : parameters()) p->adam.config.lr = lr;
}

}  // namespace ektf::model
