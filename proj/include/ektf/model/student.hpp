// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ektf/model/parameter.hpp"
#include "ektf/numkit/matrix.hpp"

namespace ektf::model {

enum class StudentKind { kMlp, kCrossNet };

std::string_view to_string(StudentKind kind);
StudentKind parse_student_kind(std::string_view text);

struct StudentConfig {
  StudentKind kind = StudentKind::kMlp;
  std::size_t input_dim = 0;
  /// MLP hidden widths; empty means a single affine layer.
  std::vector<std::size_t> hidden = {64, 64};
  /// Number of cross layers for the cross-network student.
  std::size_t cross_layers = 2;
  double init_std = 0.01;
};

/// Activations cached by forward() for the matching backward() call.
class ForwardTrace {
 public:
  std::vector<numkit::Matrix> saved;

  bool consumed() const { return consumed_; }
  void mark_consumed() { consumed_ = true; }

 private:
  bool consumed_ = false;
};

struct StudentOutput {
  std::vector<double> logits;
  std::vector<double> probs;
  ForwardTrace trace;
};

/// A scalar-output network over the concatenated embedding vector h.
class StudentNet {
 public:
  virtual ~StudentNet() = default;

  virtual StudentKind kind() const = 0;
  virtual StudentOutput forward(const numkit::Matrix& h) const = 0;

  /// Accumulates parameter gradients for dL/dlogit and returns dL/dh.
  /// Throws UsageError if the trace was already consumed.
  virtual numkit::Matrix backward(ForwardTrace& trace, std::span<const double> dlogit) = 0;

  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::unique_ptr<StudentNet> clone() const = 0;
};

/// Hidden layers affine + ReLU, then affine to one logit.
class MlpStudent final : public StudentNet {
 public:
  MlpStudent(const StudentConfig& config, numkit::Rng& rng, const std::string& name_prefix);

  StudentKind kind() const override { return StudentKind::kMlp; }
  StudentOutput forward(const numkit::Matrix& h) const override;
  numkit::Matrix backward(ForwardTrace& trace, std::span<const double> dlogit) override;
  std::vector<Parameter*> parameters() override;
  std::unique_ptr<StudentNet> clone() const override {
    return std::make_unique<MlpStudent>(*this);
  }

  struct Dense {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out
  };
  std::vector<Dense>& layers() { return layers_; }

 private:
  std::vector<Dense> layers_;
};

/// x_{l+1} = x_0 * (x_l W_l + b_l) + x_l (elementwise product), followed by
/// an affine head to one logit.
class CrossNetStudent final : public StudentNet {
 public:
  CrossNetStudent(const StudentConfig& config, numkit::Rng& rng, const std::string& name_prefix);

  StudentKind kind() const override { return StudentKind::kCrossNet; }
  StudentOutput forward(const numkit::Matrix& h) const override;
  numkit::Matrix backward(ForwardTrace& trace, std::span<const double> dlogit) override;
  std::vector<Parameter*> parameters() override;
  std::unique_ptr<StudentNet> clone() const override {
    return std::make_unique<CrossNetStudent>(*this);
  }

  struct Cross {
    Parameter weight;  // p x p
    Parameter bias;    // 1 x p
  };
  std::vector<Cross>& cross_layers() { return cross_; }
  MlpStudent::Dense& head() { return head_; }

 private:
  std::vector<Cross> cross_;
  MlpStudent::Dense head_;
};

std::unique_ptr<StudentNet> make_student(const StudentConfig& config, numkit::Rng& rng,
                                         const std::string& name_prefix);

}  // namespace ektf::model
