// SPDX-License-Identifier: Apache-2.0
#include "ektf/model/student.hpp"

#include "ektf/error.hpp"
#include "ektf/numkit/kernels.hpp"

namespace ektf::model {

using numkit::Matrix;

std::string_view to_string(StudentKind kind) {
  return kind == StudentKind::kMlp ? "mlp" : "crossnet";
}

StudentKind parse_student_kind(std::string_view text) {
  if (text == "mlp") return StudentKind::kMlp;
  if (text == "crossnet") return StudentKind::kCrossNet;
  throw ConfigError("unknown student kind '" + std::string(text) + "'");
}

namespace {

MlpStudent::Dense make_dense(std::size_t in, std::size_t out, double init_std, numkit::Rng& rng,
                             const std::string& name) {
  return {Parameter(name + ".w", normal_matrix(in, out, init_std, rng)),
          Parameter(name + ".b", Matrix(1, out))};
}

void add_into(Matrix& acc, const Matrix& g) {
  auto a = acc.flat();
  auto b = g.flat();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void add_into(Matrix& acc, const std::vector<double>& g) {
  auto a = acc.flat();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += g[i];
}

void consume(ForwardTrace& trace) {
  if (trace.consumed()) throw UsageError("forward trace reused for a second backward pass");
  trace.mark_consumed();
}

Matrix logit_grad_column(std::span<const double> dlogit, std::size_t rows) {
  if (dlogit.size() != rows) {
    throw DimensionError("dlogit has " + std::to_string(dlogit.size()) + " entries, batch has " +
                         std::to_string(rows));
  }
  return Matrix(rows, 1, std::vector<double>(dlogit.begin(), dlogit.end()));
}

void fill_output(const Matrix& logits, StudentOutput& out) {
  out.logits.assign(logits.flat().begin(), logits.flat().end());
  out.probs.resize(out.logits.size());
  for (std::size_t i = 0; i < out.logits.size(); ++i) out.probs[i] = numkit::sigmoid(out.logits[i]);
}

}  // namespace

MlpStudent::MlpStudent(const StudentConfig& config, numkit::Rng& rng,
                       const std::string& name_prefix) {
  if (config.input_dim == 0) throw ConfigError("student input dim must be positive");
  std::size_t in = config.input_dim;
  for (std::size_t l = 0; l < config.hidden.size(); ++l) {
    if (config.hidden[l] == 0) throw ConfigError("hidden layer width must be positive");
    layers_.push_back(make_dense(in, config.hidden[l], config.init_std, rng,
                                 name_prefix + "mlp." + std::to_string(l)));
    in = config.hidden[l];
  }
  layers_.push_back(make_dense(in, 1, config.init_std, rng, name_prefix + "mlp.out"));
}

StudentOutput MlpStudent::forward(const Matrix& h) const {
  StudentOutput out;
  auto& saved = out.trace.saved;
  // saved: input, then (pre-activation, activation) per hidden layer.
  saved.reserve(2 * layers_.size() - 1);
  saved.push_back(h);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Matrix pre = numkit::affine_forward(saved.back(), layers_[l].weight.value,
                                        layers_[l].bias.value.flat());
    Matrix act = numkit::activation(numkit::Activation::kRelu, pre);
    saved.push_back(std::move(pre));
    saved.push_back(std::move(act));
  }
  const auto& last = layers_.back();
  fill_output(numkit::affine_forward(saved.back(), last.weight.value, last.bias.value.flat()), out);
  return out;
}

Matrix MlpStudent::backward(ForwardTrace& trace, std::span<const double> dlogit) {
  consume(trace);
  const auto& saved = trace.saved;
  Matrix grad = logit_grad_column(dlogit, saved.front().rows());
  Matrix dw;
  std::vector<double> db;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Matrix& input = l == 0 ? saved[0] : saved[2 * l];
    Matrix dx;
    numkit::affine_backward(input, layers_[l].weight.value, grad, &dx, dw, db);
    add_into(layers_[l].weight.grad, dw);
    add_into(layers_[l].bias.grad, db);
    if (l > 0) {
      grad = numkit::activation_backward(numkit::Activation::kRelu, saved[2 * l - 1],
                                         saved[2 * l], dx);
    } else {
      grad = std::move(dx);
    }
  }
  return grad;
}

std::vector<Parameter*> MlpStudent::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

CrossNetStudent::CrossNetStudent(const StudentConfig& config, numkit::Rng& rng,
                                 const std::string& name_prefix) {
  const std::size_t p = config.input_dim;
  if (p == 0) throw ConfigError("student input dim must be positive");
  for (std::size_t l = 0; l < config.cross_layers; ++l) {
    const std::string name = name_prefix + "cross." + std::to_string(l);
    cross_.push_back({Parameter(name + ".w", normal_matrix(p, p, config.init_std, rng)),
                      Parameter(name + ".b", Matrix(1, p))});
  }
  head_ = make_dense(p, 1, config.init_std, rng, name_prefix + "cross.out");
}

StudentOutput CrossNetStudent::forward(const Matrix& h) const {
  StudentOutput out;
  auto& saved = out.trace.saved;
  // saved: x_0, then (z_l, x_{l+1}) per cross layer.
  saved.reserve(1 + 2 * cross_.size());
  saved.push_back(h);
  const Matrix& x0 = saved.front();
  for (const auto& layer : cross_) {
    const Matrix& xl = saved.back();
    Matrix z = numkit::affine_forward(xl, layer.weight.value, layer.bias.value.flat());
    Matrix next(xl.rows(), xl.cols());
    auto n = next.flat();
    auto a = x0.flat();
    auto zz = z.flat();
    auto prev = xl.flat();
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = a[i] * zz[i] + prev[i];
    saved.push_back(std::move(z));
    saved.push_back(std::move(next));
  }
  fill_output(numkit::affine_forward(saved.back(), head_.weight.value, head_.bias.value.flat()),
              out);
  return out;
}

Matrix CrossNetStudent::backward(ForwardTrace& trace, std::span<const double> dlogit) {
  consume(trace);
  const auto& saved = trace.saved;
  const Matrix& x0 = saved.front();
  Matrix dw;
  std::vector<double> db;
  Matrix grad;
  numkit::affine_backward(saved.back(), head_.weight.value,
                          logit_grad_column(dlogit, x0.rows()), &grad, dw, db);
  add_into(head_.weight.grad, dw);
  add_into(head_.bias.grad, db);

  Matrix dx0(x0.rows(), x0.cols());
  for (std::size_t l = cross_.size(); l-- > 0;) {
    const Matrix& xl = saved[2 * l];
    const Matrix& z = saved[2 * l + 1];
    Matrix dz(z.rows(), z.cols());
    auto g = grad.flat();
    auto a = x0.flat();
    auto zz = z.flat();
    auto d0 = dx0.flat();
    auto dzz = dz.flat();
    for (std::size_t i = 0; i < g.size(); ++i) {
      dzz[i] = g[i] * a[i];
      d0[i] += g[i] * zz[i];
    }
    Matrix dxl;
    numkit::affine_backward(xl, cross_[l].weight.value, dz, &dxl, dw, db);
    add_into(cross_[l].weight.grad, dw);
    add_into(cross_[l].bias.grad, db);
    add_into(dxl, grad);  // residual path
    grad = std::move(dxl);
  }
  add_into(grad, dx0);
  return grad;
}

std::vector<Parameter*> CrossNetStudent::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : cross_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

std::unique_ptr<StudentNet> make_student(const StudentConfig& config, numkit::Rng& rng,
                                         const std::string& name_prefix) {
  switch (config.kind) {
    case StudentKind::kMlp: return std::make_unique<MlpStudent>(config, rng, name_prefix);
    case StudentKind::kCrossNet:
      return std::make_unique<CrossNetStudent>(config, rng, name_prefix);
  }
  throw ConfigError("unknown student kind");
}

}  // namespace ektf::model
