// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

#include "ektf/numkit/matrix.hpp"

namespace ektf::numkit {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers for one parameter tensor. Buffers are sized on the first
/// step.
struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;
  AdamConfig config;

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {}
};

/// One bias-corrected Adam update of `param` in place. Throws TrainingError
/// naming `name` if the gradient holds a NaN or infinity, and
/// DimensionError on shape mismatch. The state is untouched on error.
void adam_step(std::string_view name, Matrix& param, const Matrix& grad,
               AdamState& state);

}  // namespace ektf::numkit
