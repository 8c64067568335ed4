// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "ektf/numkit/adam.hpp"
#include "ektf/numkit/matrix.hpp"
#include "ektf/numkit/rng.hpp"

namespace ektf::model {

/// A trainable tensor with its gradient accumulator and optimizer state.
/// Exactly one owner applies updates to it.
struct Parameter {
  std::string name;
  numkit::Matrix value;
  numkit::Matrix grad;
  numkit::AdamState adam;

  Parameter() = default;
  Parameter(std::string n, numkit::Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
  void step() { numkit::adam_step(name, value, grad, adam); }
};

/// Normal(0, stddev^2) entries.
numkit::Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev,
                             numkit::Rng& rng);

}  // namespace ektf::model
