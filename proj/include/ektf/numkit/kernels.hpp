// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ektf/numkit/matrix.hpp"

namespace ektf::numkit {

enum class Activation { kRelu, kSigmoid };

/// out[i,j] = sum_k x[i,k] * w[k,j] + b[j].
Matrix affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b);

/// Gradients of affine_forward. `dx` may be null when the input gradient is
/// not needed. `dw` and `db` are overwritten.
void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dout,
                     Matrix* dx, Matrix& dw, std::vector<double>& db);

/// Logistic function, branching on sign so neither tail overflows.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix activation(Activation kind, const Matrix& x);

/// Backward of activation. `input` is the pre-activation tensor and
/// `output` the value activation() produced for it.
Matrix activation_backward(Activation kind, const Matrix& input,
                           const Matrix& output, const Matrix& dout);

/// C = A * B^T, used for the transposed products in backward passes.
Matrix matmul_transposed_b(const Matrix& a, const Matrix& b);

/// C = A^T * B.
Matrix matmul_transposed_a(const Matrix& a, const Matrix& b);

}  // namespace ektf::numkit
