// SPDX-License-Identifier: Apache-2.0
#include "ektf/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ektf/numkit/rng.hpp"

namespace ektf::trainer {

using objective::ConcatHeadView;
using objective::StudentOutputs;

void TrainConfig::validate() const {
  if (model.num_students() == 0) throw ConfigError("K must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (eval_batch_size == 0) throw ConfigError("eval batch size must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (max_epochs == 0) throw ConfigError("max epochs must be at least 1");
  if (model.embedding_dim == 0) throw ConfigError("embedding dim must be at least 1");
  objective.validate(model.num_students());
  if (objective.fusion == objective::Fusion::kConcat && !model.concat_head) {
    throw ConfigError("concat fusion requires the model's concat head");
  }
}

const MetricPair& Evaluation::best_student() const {
  return *std::max_element(students.begin(), students.end(),
                           [](const auto& a, const auto& b) { return a.auc < b.auc; });
}

const MetricPair& Evaluation::worst_student() const {
  return *std::min_element(students.begin(), students.end(),
                           [](const auto& a, const auto& b) { return a.auc < b.auc; });
}

objective::Fusion evaluation_fusion(const objective::ObjectiveSpec& spec) {
  return spec.variant == objective::Variant::kVanilla ? spec.fusion : objective::Fusion::kMean;
}

namespace {

std::optional<ConcatHeadView> head_view(const model::EnsembleModel& model) {
  const auto* head = model.concat_head();
  if (head == nullptr) return std::nullopt;
  return ConcatHeadView{head->weight.value.flat(), head->bias.value(0, 0)};
}

}  // namespace

Evaluation evaluate(const model::EnsembleModel& model, const objective::ObjectiveSpec& spec,
                    const datapipe::EncodedDataset& dataset, std::size_t batch_size) {
  const std::size_t n = dataset.num_rows();
  if (n == 0) throw MetricError("cannot evaluate an empty dataset");
  const std::size_t k_count = model.num_students();
  const auto fusion = evaluation_fusion(spec);
  const auto head = head_view(model);

  std::vector<double> labels(n);
  std::vector<double> ensemble(n);
  std::vector<std::vector<double>> students(k_count, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) labels[i] = dataset.labels[i];

  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    const auto batch = datapipe::contiguous_batch(dataset, begin, end);
    auto fwd = model.forward(batch);
    StudentOutputs outputs{std::move(fwd.logits), std::move(fwd.probs)};
    const auto fused = objective::fuse(outputs, fusion, head ? &*head : nullptr);
    std::copy(fused.y_hat.begin(), fused.y_hat.end(), ensemble.begin() + begin);
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto row = outputs.probs.row(k);
      std::copy(row.begin(), row.end(), students[k].begin() + begin);
    }
  }

  Evaluation eval;
  eval.ensemble = {logloss(ensemble, labels), auc(ensemble, labels)};
  for (const auto& s : students) eval.students.push_back({logloss(s, labels), auc(s, labels)});
  return eval;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ConfigError("patience must be at least 1");
}

bool EarlyStopping::update(double monitor) {
  ++epoch_;
  improved_last_ = epoch_ == 1 || monitor > best_;
  if (improved_last_) {
    best_ = monitor;
    best_epoch_ = epoch_;
    bad_epochs_ = 0;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

objective::LossBreakdown train_step(model::EnsembleModel& model,
                                    const objective::ObjectiveSpec& spec,
                                    const datapipe::Batch& batch) {
  model.zero_grad();
  auto fwd = model.forward(batch);
  const StudentOutputs outputs{fwd.logits, fwd.probs};
  const auto head = head_view(model);
  auto loss = objective::total_loss(spec, outputs, batch.labels, head ? &*head : nullptr);
  if (!std::isfinite(loss.total)) throw TrainingError("non-finite training loss");
  model.backward(batch, fwd, loss.dlogits);
  if (auto* h = model.concat_head(); h != nullptr && !loss.dhead_weights.empty()) {
    for (std::size_t k = 0; k < loss.dhead_weights.size(); ++k) {
      h->weight.grad(k, 0) += loss.dhead_weights[k];
    }
    h->bias.grad(0, 0) += loss.dhead_bias;
  }
  model.step();
  return loss;
}

TrainResult train(const TrainConfig& config, const datapipe::DatasetSplits& data,
                  const TrainHooks& hooks) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  model::ModelConfig mc = config.model;
  mc.seed = config.seed;
  model::EnsembleModel model(mc, data.train.vocab_sizes);
  model.set_learning_rate(config.learning_rate);

  TrainReport report;
  EarlyStopping stopper(config.patience);
  auto best = std::make_shared<const model::EnsembleModel>(model);
  auto last_good = best;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const datapipe::Batcher batcher(data.train, config.batch_size,
                                    numkit::Rng::derive(config.seed, 1000 + epoch), true);
    EpochRecord record;
    record.epoch = epoch;
    const std::size_t num_batches = batcher.num_batches();
    for (std::size_t b = 0; b < num_batches; ++b) {
      const auto batch = batcher.batch(b);
      objective::LossBreakdown loss;
      try {
        loss = train_step(model, config.objective, batch);
      } catch (const TrainingError& e) {
        throw DivergedError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                ", step " + std::to_string(report.steps + 1),
                            last_good);
      }
      ++report.steps;
      if (hooks.on_step) hooks.on_step({report.steps, epoch, &loss});
      record.train.total += loss.total;
      record.train.ctr_ensemble += loss.ctr_ensemble;
      for (double v : loss.ctr_student) record.train.ctr_students += v;
      for (double v : loss.kd) record.train.kd += v;
      for (double v : loss.dml) record.train.dml += v;
    }
    const double nb = static_cast<double>(num_batches);
    record.train.total /= nb;
    record.train.ctr_ensemble /= nb;
    record.train.ctr_students /= nb;
    record.train.kd /= nb;
    record.train.dml /= nb;

    record.val = evaluate(model, config.objective, data.val, config.eval_batch_size);
    const bool stop = stopper.update(record.val.ensemble.auc);
    last_good = std::make_shared<const model::EnsembleModel>(model);
    if (stopper.improved_last()) best = last_good;
    report.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);
    if (stop) break;
  }

  report.best_epoch = stopper.best_epoch();
  model = *best;
  report.test = evaluate(model, config.objective, data.test, config.eval_batch_size);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(report), std::move(model)};
}

}  // namespace ektf::trainer
