// SPDX-License-Identifier: Apache-2.0
#include "ektf/numkit/adam.hpp"

#include <cmath>
#include <string>

#include "ektf/error.hpp"

namespace ektf::numkit {

void adam_step(std::string_view name, Matrix& param, const Matrix& grad, AdamState& state) {
  require_same_shape(param, grad, "adam_step");
  if (!grad.all_finite()) {
    throw TrainingError("non-finite gradient for parameter '" + std::string(name) + "'");
  }
  if (state.m.size() == 0 && param.size() != 0) {
    state.m = Matrix(param.rows(), param.cols());
    state.v = Matrix(param.rows(), param.cols());
  }
  require_same_shape(param, state.m, "adam_step moments");

  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);

  auto p = param.flat();
  auto g = grad.flat();
  auto m = state.m.flat();
  auto v = state.v.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace ektf::numkit
