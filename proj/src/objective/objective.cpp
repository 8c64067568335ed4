// SPDX-License-Identifier: Apache-2.0
#include "ektf/objective/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ektf/error.hpp"
#include "ektf/numkit/kernels.hpp"

namespace ektf::objective {

std::string_view to_string(Fusion f) {
  switch (f) {
    case Fusion::kMean: return "mean";
    case Fusion::kSum: return "sum";
    case Fusion::kConcat: return "concat";
  }
  return "mean";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kVanilla: return "vanilla";
    case Variant::kKdCtr: return "kd_ctr";
    case Variant::kDmlCtr: return "dml_ctr";
    case Variant::kEktf: return "ektf";
  }
  return "ektf";
}

Fusion parse_fusion(std::string_view text) {
  if (text == "mean") return Fusion::kMean;
  if (text == "sum") return Fusion::kSum;
  if (text == "concat") return Fusion::kConcat;
  throw ConfigError("unknown fusion '" + std::string(text) + "'");
}

Variant parse_variant(std::string_view text) {
  if (text == "vanilla") return Variant::kVanilla;
  if (text == "kd_ctr") return Variant::kKdCtr;
  if (text == "dml_ctr") return Variant::kDmlCtr;
  if (text == "ektf") return Variant::kEktf;
  throw ConfigError("unknown objective variant '" + std::string(text) + "'");
}

StudentOutputs StudentOutputs::from_logits(Matrix logits) {
  StudentOutputs out;
  out.probs = Matrix(logits.rows(), logits.cols());
  auto z = logits.flat();
  auto p = out.probs.flat();
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = numkit::sigmoid(z[i]);
  out.logits = std::move(logits);
  return out;
}

namespace {

// Accumulated as offsets from the first student so identical rows return
// that row exactly.
std::vector<double> mean_probs(const Matrix& probs) {
  const std::size_t k_count = probs.rows(), n = probs.cols();
  const auto first = probs.row(0);
  std::vector<double> offset(n, 0.0);
  for (std::size_t k = 1; k < k_count; ++k) {
    const auto row = probs.row(k);
    for (std::size_t i = 0; i < n; ++i) offset[i] += row[i] - first[i];
  }
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = first[i] + offset[i] / static_cast<double>(k_count);
  return t;
}

bool clamped(double p) { return p < kProbClamp || p > 1.0 - kProbClamp; }

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void require_batch(const StudentOutputs& outputs, std::span<const double> y) {
  if (outputs.num_students() == 0) throw ConfigError("objective needs at least one student");
  if (y.size() != outputs.batch_size()) {
    throw DimensionError("labels have " + std::to_string(y.size()) + " entries, outputs " +
                         std::to_string(outputs.batch_size()));
  }
}

// Softmax of `values` restricted to entries where `mask` is true.
std::vector<double> masked_softmax(const std::vector<double>& values,
                                   const std::vector<bool>& mask) {
  double mx = -INFINITY;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) mx = std::max(mx, values[i]);
  }
  std::vector<double> out(values.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) sum += out[i] = std::exp(values[i] - mx);
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace

EnsembleOutput fuse(const StudentOutputs& outputs, Fusion fusion, const ConcatHeadView* head) {
  if (outputs.num_students() == 0) throw ConfigError("fusion needs at least one student");
  const std::size_t k_count = outputs.num_students(), n = outputs.batch_size();
  EnsembleOutput out;
  out.fusion = fusion;
  switch (fusion) {
    case Fusion::kMean:
      out.y_hat = mean_probs(outputs.probs);
      break;
    case Fusion::kSum: {
      out.y_hat.assign(n, 0.0);
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto row = outputs.logits.row(k);
        for (std::size_t i = 0; i < n; ++i) out.y_hat[i] += row[i];
      }
      for (auto& v : out.y_hat) v = numkit::sigmoid(v);
      break;
    }
    case Fusion::kConcat: {
      if (head == nullptr || head->weights.size() != k_count) {
        throw ConfigError("concat fusion requires an initialised head with K weights");
      }
      out.y_hat.assign(n, head->bias);
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto row = outputs.logits.row(k);
        for (std::size_t i = 0; i < n; ++i) out.y_hat[i] += head->weights[k] * row[i];
      }
      for (auto& v : out.y_hat) v = numkit::sigmoid(v);
      break;
    }
  }
  return out;
}

double ctr_loss(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.size() != y.size()) throw DimensionError("ctr_loss: prediction/label length");
  if (y.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(y_hat[i]);
    sum += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(y.size());
}

ComponentLoss kd_loss(const StudentOutputs& outputs, std::span<const double> teacher,
                      std::span<const double> lambda) {
  const std::size_t k_count = outputs.num_students(), n = outputs.batch_size();
  if (teacher.size() != n || lambda.size() != k_count) {
    throw DimensionError("kd_loss: teacher or lambda length");
  }
  ComponentLoss out;
  out.per_student.assign(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto p = outputs.probs.row(k);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = teacher[i] - p[i];
      s += d * d;
    }
    out.per_student[k] = lambda[k] * s / static_cast<double>(n);
    out.total += out.per_student[k];
  }
  return out;
}

ComponentLoss dml_loss(const StudentOutputs& outputs, const Matrix& mu) {
  const std::size_t k_count = outputs.num_students(), n = outputs.batch_size();
  if (mu.rows() != k_count || mu.cols() != k_count) throw DimensionError("dml_loss: mu shape");
  ComponentLoss out;
  out.per_student.assign(k_count, 0.0);
  if (k_count < 2) return out;
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto pk = outputs.probs.row(k);
    for (std::size_t l = 0; l < k_count; ++l) {
      if (l == k) continue;
      const auto pl = outputs.probs.row(l);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = pl[i] - pk[i];
        s += d * d;
      }
      out.per_student[k] += mu(k, l) * s / static_cast<double>(n);
    }
    out.total += out.per_student[k];
  }
  out.total /= static_cast<double>(k_count);
  return out;
}

ExamWeights weights_from_scores(std::vector<double> scores) {
  const std::size_t k_count = scores.size();
  for (double s : scores) {
    if (!std::isfinite(s)) throw TrainingError("non-finite examination score");
  }
  ExamWeights w;
  std::vector<double> neg(k_count);
  for (std::size_t k = 0; k < k_count; ++k) neg[k] = -scores[k];
  w.lambda = masked_softmax(neg, std::vector<bool>(k_count, true));
  w.mu = Matrix(k_count, k_count);
  for (std::size_t k = 0; k < k_count && k_count > 1; ++k) {
    std::vector<double> rel(k_count);
    std::vector<bool> mask(k_count, true);
    mask[k] = false;
    for (std::size_t l = 0; l < k_count; ++l) rel[l] = scores[l] - scores[k];
    const auto row = masked_softmax(rel, mask);
    std::copy(row.begin(), row.end(), w.mu.row(k).begin());
  }
  w.scores = std::move(scores);
  return w;
}

ExamWeights exam_weights(const StudentOutputs& outputs, std::span<const double> y) {
  require_batch(outputs, y);
  const std::size_t k_count = outputs.num_students(), n = outputs.batch_size();
  std::vector<double> scores(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto p = outputs.probs.row(k);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += std::abs(y[i] - p[i]);
    scores[k] = 1.0 - err / static_cast<double>(n);
  }
  return weights_from_scores(std::move(scores));
}

ExamWeights uniform_weights(std::vector<double> scores, UniformPeerWeight peer) {
  const std::size_t k_count = scores.size();
  ExamWeights w;
  w.lambda.assign(k_count, 1.0 / static_cast<double>(k_count));
  w.mu = Matrix(k_count, k_count);
  if (k_count > 1) {
    const double m = peer == UniformPeerWeight::kOneOverK
                         ? 1.0 / static_cast<double>(k_count)
                         : 1.0 / static_cast<double>(k_count - 1);
    for (std::size_t k = 0; k < k_count; ++k) {
      for (std::size_t l = 0; l < k_count; ++l) {
        if (l != k) w.mu(k, l) = m;
      }
    }
  }
  w.scores = std::move(scores);
  return w;
}

void ObjectiveSpec::validate(std::size_t num_students) const {
  if (num_students == 0) throw ConfigError("objective needs at least one student");
  if (variant != Variant::kVanilla && fusion != Fusion::kMean) {
    throw ConfigError("fusion '" + std::string(to_string(fusion)) +
                      "' only applies to the vanilla variant; knowledge transfer uses the mean "
                      "teacher");
  }
}

FrozenTerms freeze(const ObjectiveSpec& spec, const StudentOutputs& outputs,
                   std::span<const double> y) {
  FrozenTerms f;
  f.weights = exam_weights(outputs, y);
  if (!spec.use_exam) f.weights = uniform_weights(std::move(f.weights.scores), spec.uniform_peer);
  f.target_probs = outputs.probs;
  return f;
}

LossBreakdown total_loss(const ObjectiveSpec& spec, const StudentOutputs& outputs,
                         std::span<const double> y, const ConcatHeadView* head,
                         const FrozenTerms* frozen) {
  require_batch(outputs, y);
  spec.validate(outputs.num_students());
  if (!outputs.logits.all_finite()) throw TrainingError("non-finite student logits");
  const std::size_t k_count = outputs.num_students(), n = outputs.batch_size();
  const double kd = static_cast<double>(k_count);
  const double bn = static_cast<double>(n);

  LossBreakdown out;
  out.weights = frozen != nullptr ? frozen->weights : freeze(spec, outputs, y).weights;
  out.dlogits = Matrix(k_count, n);
  out.ctr_student.assign(k_count, 0.0);
  out.kd.assign(k_count, 0.0);
  out.dml.assign(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) out.ctr_student[k] = ctr_loss(outputs.probs.row(k), y);

  // dL/dp accumulated for the MSE terms; converted to logits at the end.
  Matrix dprobs(k_count, n);

  // Student-level CTR: d/dz of coef * BCE(sigmoid(z)) is coef * (p - y) / B.
  const auto add_student_ctr = [&](double coef) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto p = outputs.probs.row(k);
      auto dz = out.dlogits.row(k);
      for (std::size_t i = 0; i < n; ++i) {
        if (!clamped(p[i])) dz[i] += (p[i] - y[i]) / bn * coef;
      }
    }
  };

  // CTR of the mean of probabilities, routed through each student's sigmoid.
  const auto add_mean_teacher_ctr = [&](const std::vector<double>& t) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto p = outputs.probs.row(k);
      auto dz = out.dlogits.row(k);
      for (std::size_t i = 0; i < n; ++i) {
        if (clamped(t[i])) continue;
        const double ratio = (p[i] * (1.0 - p[i])) / (t[i] * (1.0 - t[i]));
        dz[i] += (t[i] - y[i]) / bn * ratio / kd;
      }
    }
  };

  const Matrix& target_probs =
      (frozen != nullptr && spec.stop_gradient_targets) ? frozen->target_probs : outputs.probs;

  const auto add_kd = [&]() {
    const auto teacher = mean_probs(target_probs);
    const auto loss = kd_loss(outputs, teacher, out.weights.lambda);
    out.kd = loss.per_student;
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto p = outputs.probs.row(k);
      const double lam = out.weights.lambda[k];
      for (std::size_t i = 0; i < n; ++i) {
        const double g = 2.0 * lam * (teacher[i] - p[i]) / bn;
        dprobs(k, i) -= g;
        if (!spec.stop_gradient_targets) {
          for (std::size_t j = 0; j < k_count; ++j) dprobs(j, i) += g / kd;
        }
      }
    }
    return loss.total;
  };

  // coef scales every L_DML^k; returns coef * sum_k L_DML^k.
  const auto add_dml = [&](double coef) {
    if (k_count < 2) return 0.0;
    const auto& mu = out.weights.mu;
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto pk = outputs.probs.row(k);
      double lk = 0.0;
      for (std::size_t l = 0; l < k_count; ++l) {
        if (l == k) continue;
        const auto tl = target_probs.row(l);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = tl[i] - pk[i];
          s += d * d;
          const double g = coef * 2.0 * mu(k, l) * d / bn;
          dprobs(k, i) -= g;
          if (!spec.stop_gradient_targets) dprobs(l, i) += g;
        }
        lk += mu(k, l) * s / bn;
      }
      out.dml[k] = lk;
    }
    double sum = 0.0;
    for (double v : out.dml) sum += v;
    return coef * sum;
  };

  switch (spec.variant) {
    case Variant::kVanilla: {
      const auto fused = fuse(outputs, spec.fusion, head);
      out.ctr_ensemble = ctr_loss(fused.y_hat, y);
      out.total = out.ctr_ensemble;
      if (spec.fusion == Fusion::kMean) {
        add_mean_teacher_ctr(fused.y_hat);
      } else {
        // Both sum and concat are sigmoid(affine(logits)).
        std::vector<double> g(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          if (!clamped(fused.y_hat[i])) g[i] = (fused.y_hat[i] - y[i]) / bn;
        }
        for (std::size_t k = 0; k < k_count; ++k) {
          const double w = spec.fusion == Fusion::kSum ? 1.0 : head->weights[k];
          auto dz = out.dlogits.row(k);
          for (std::size_t i = 0; i < n; ++i) dz[i] += w * g[i];
        }
        if (spec.fusion == Fusion::kConcat) {
          out.dhead_weights.assign(k_count, 0.0);
          for (std::size_t k = 0; k < k_count; ++k) {
            const auto z = outputs.logits.row(k);
            for (std::size_t i = 0; i < n; ++i) out.dhead_weights[k] += z[i] * g[i];
          }
          for (double gi : g) out.dhead_bias += gi;
        }
      }
      break;
    }
    case Variant::kKdCtr: {
      const auto teacher = mean_probs(outputs.probs);
      out.ctr_ensemble = ctr_loss(teacher, y);
      add_mean_teacher_ctr(teacher);
      out.total = out.ctr_ensemble + add_kd();
      break;
    }
    case Variant::kDmlCtr: {
      out.ctr_ensemble = ctr_loss(mean_probs(outputs.probs), y);
      add_student_ctr(1.0);
      double ctr_sum = 0.0;
      for (double v : out.ctr_student) ctr_sum += v;
      out.total = ctr_sum + add_dml(1.0);
      break;
    }
    case Variant::kEktf: {
      const auto teacher = mean_probs(outputs.probs);
      out.ctr_ensemble = ctr_loss(teacher, y);
      add_student_ctr(1.0 / kd);
      double ctr_sum = 0.0;
      for (double v : out.ctr_student) ctr_sum += v;
      out.total = ctr_sum / kd;
      if (spec.include_kd) out.total += add_kd();
      if (spec.include_dml) out.total += add_dml(1.0 / kd);
      if (spec.teacher_ctr) {
        add_mean_teacher_ctr(teacher);
        out.total += out.ctr_ensemble;
      }
      break;
    }
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    const auto p = outputs.probs.row(k);
    auto dz = out.dlogits.row(k);
    for (std::size_t i = 0; i < n; ++i) dz[i] += dprobs(k, i) * (p[i] * (1.0 - p[i]));
  }
  return out;
}

}  // namespace ektf::objective
