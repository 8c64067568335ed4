// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ektf/datapipe/dataset.hpp"
#include "ektf/error.hpp"
#include "ektf/model/ensemble.hpp"
#include "ektf/objective/objective.hpp"
#include "ektf/trainer/metrics.hpp"

namespace ektf::trainer {

struct TrainConfig {
  model::ModelConfig model;
  objective::ObjectiveSpec objective;
  double learning_rate = 0.001;
  std::size_t batch_size = 4096;
  std::size_t max_epochs = 20;
  std::size_t patience = 2;
  /// Seeds model initialisation (overrides model.seed) and the per-epoch
  /// shuffles.
  std::uint64_t seed = 2024;
  std::size_t eval_batch_size = 8192;

  std::size_t num_students() const { return model.num_students(); }
  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// Ensemble plus per-student metrics on one dataset.
struct Evaluation {
  MetricPair ensemble;
  std::vector<MetricPair> students;

  const MetricPair& best_student() const;
  const MetricPair& worst_student() const;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

/// Prediction scored as "the ensemble": the vanilla path uses its fusion,
/// every knowledge-transfer variant the mean teacher.
objective::Fusion evaluation_fusion(const objective::ObjectiveSpec& spec);

/// Full deterministic pass in file order; never mutates the model. Throws
/// MetricError on an empty or single-class dataset.
Evaluation evaluate(const model::EnsembleModel& model, const objective::ObjectiveSpec& spec,
                    const datapipe::EncodedDataset& dataset, std::size_t batch_size = 8192);

/// Patience rule on a monitor that should increase. An epoch improves only
/// if strictly greater than the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records one epoch (1-based); returns true when training should stop.
  bool update(double monitor);

  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }
  bool improved_last() const { return improved_last_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t bad_epochs_ = 0;
  double best_ = 0.0;
  bool improved_last_ = false;
};

struct LossTotals {
  double total = 0.0;
  double ctr_ensemble = 0.0;
  double ctr_students = 0.0;
  double kd = 0.0;
  double dml = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  /// Batch-averaged training loss components.
  LossTotals train;
  Evaluation val;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  const objective::LossBreakdown* loss = nullptr;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  Evaluation test;
  double wall_seconds = 0.0;
  std::size_t steps = 0;
};

struct TrainResult {
  TrainReport report;
  model::EnsembleModel model;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Raised when the loss becomes non-finite. Carries the last parameters
/// that produced a finite validation pass.
class DivergedError : public TrainingError {
 public:
  DivergedError(const std::string& what, std::shared_ptr<const model::EnsembleModel> last_good)
      : TrainingError(what), last_good_(std::move(last_good)) {}
  const std::shared_ptr<const model::EnsembleModel>& last_good() const { return last_good_; }

 private:
  std::shared_ptr<const model::EnsembleModel> last_good_;
};

/// One Adam step of `model` on `batch`; returns the loss breakdown.
objective::LossBreakdown train_step(model::EnsembleModel& model,
                                    const objective::ObjectiveSpec& spec,
                                    const datapipe::Batch& batch);

/// Epoch loop with early stopping on validation ensemble AUC. The best
/// epoch's parameters are restored before computing test metrics.
TrainResult train(const TrainConfig& config, const datapipe::DatasetSplits& data,
                  const TrainHooks& hooks = {});

}  // namespace ektf::trainer
