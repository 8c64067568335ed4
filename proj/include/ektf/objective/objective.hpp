// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ektf/numkit/matrix.hpp"

namespace ektf::objective {

using numkit::Matrix;

/// BCE clamp applied to probabilities before taking logs.
inline constexpr double kProbClamp = 1e-7;

enum class Fusion { kMean, kSum, kConcat };
enum class Variant { kVanilla, kKdCtr, kDmlCtr, kEktf };
/// Peer weight used when the examination mechanism is off.
enum class UniformPeerWeight { kOneOverKMinusOne, kOneOverK };

std::string_view to_string(Fusion f);
std::string_view to_string(Variant v);
Fusion parse_fusion(std::string_view text);
Variant parse_variant(std::string_view text);

/// Per-student logits and probabilities, both K x B.
struct StudentOutputs {
  Matrix logits;
  Matrix probs;

  std::size_t num_students() const { return logits.rows(); }
  std::size_t batch_size() const { return logits.cols(); }

  static StudentOutputs from_logits(Matrix logits);
};

/// Read-only view of the concat combiner: z = sum_k weights[k] * z_k + bias.
struct ConcatHeadView {
  std::span<const double> weights;
  double bias = 0.0;
};

struct EnsembleOutput {
  Fusion fusion = Fusion::kMean;
  std::vector<double> y_hat;
};

/// mean averages probabilities; sum and concat act on logits. Throws
/// ConfigError for concat without a head.
EnsembleOutput fuse(const StudentOutputs& outputs, Fusion fusion,
                    const ConcatHeadView* head = nullptr);

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double ctr_loss(std::span<const double> y_hat, std::span<const double> y);

struct ComponentLoss {
  double total = 0.0;
  std::vector<double> per_student;
};

/// L_KD^k = lambda_k * mean_i (teacher_i - p_k,i)^2; total is the sum over k.
ComponentLoss kd_loss(const StudentOutputs& outputs, std::span<const double> teacher,
                      std::span<const double> lambda);

/// L_DML^k = sum_{l != k} mu_kl * mean_i (p_l,i - p_k,i)^2; total is the
/// mean over k. Zero when K = 1.
ComponentLoss dml_loss(const StudentOutputs& outputs, const Matrix& mu);

struct ExamWeights {
  std::vector<double> scores;  // S_k
  std::vector<double> lambda;  // teaching weights, on the simplex
  Matrix mu;                   // K x K peer weights, zero diagonal
};

/// S_k = 1 - mean_i |y_i - p_k,i|; lambda = softmin(S);
/// mu row k = softmax over l != k of (S_l - S_k).
ExamWeights exam_weights(const StudentOutputs& outputs, std::span<const double> y);

/// Weights derived from given scores; exposed for property tests.
ExamWeights weights_from_scores(std::vector<double> scores);

/// lambda = 1/K and a constant off-diagonal mu.
ExamWeights uniform_weights(std::vector<double> scores, UniformPeerWeight peer);

struct ObjectiveSpec {
  Variant variant = Variant::kEktf;
  bool use_exam = true;
  /// Fusion of the vanilla path; the KD teacher is always the mean.
  Fusion fusion = Fusion::kMean;
  /// Treat the KD teacher and DML peers as constants when differentiating.
  bool stop_gradient_targets = true;
  /// EKTF components; turning one off yields the only-KD / only-DML
  /// ablations.
  bool include_kd = true;
  bool include_dml = true;
  /// Adds L_CTR of the mean teacher to the EKTF loss.
  bool teacher_ctr = false;
  UniformPeerWeight uniform_peer = UniformPeerWeight::kOneOverKMinusOne;

  /// Throws ConfigError for unsupported combinations.
  void validate(std::size_t num_students) const;
};

/// Values held fixed for a finite-difference check of the stop-gradient
/// objective: the weights and the probabilities used as MSE targets.
struct FrozenTerms {
  ExamWeights weights;
  Matrix target_probs;
};

struct LossBreakdown {
  double total = 0.0;
  /// L_CTR of the fused (vanilla) or mean-teacher prediction.
  double ctr_ensemble = 0.0;
  std::vector<double> ctr_student;
  std::vector<double> kd;
  std::vector<double> dml;
  ExamWeights weights;
  /// dL/dlogit per student, K x B.
  Matrix dlogits;
  /// Concat head gradients (concat fusion only).
  std::vector<double> dhead_weights;
  double dhead_bias = 0.0;
};

/// Weights and targets of the current outputs, for use with total_loss.
FrozenTerms freeze(const ObjectiveSpec& spec, const StudentOutputs& outputs,
                   std::span<const double> y);

/// Loss of the requested variant with gradients w.r.t. every student
/// logit. Weights and targets come from `frozen` when given, otherwise
/// from the outputs themselves.
LossBreakdown total_loss(const ObjectiveSpec& spec, const StudentOutputs& outputs,
                         std::span<const double> y, const ConcatHeadView* head = nullptr,
                         const FrozenTerms* frozen = nullptr);

}  // namespace ektf::objective
