// SPDX-License-Identifier: Apache-2.0
#include "ektf/numkit/kernels.hpp"

#include <algorithm>

#include "ektf/error.hpp"

namespace ektf::numkit {

Matrix affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b) {
  if (x.cols() != w.rows() || b.size() != w.cols()) {
    throw DimensionError("affine_forward: x" + x.shape_string() + " w" + w.shape_string() +
                         " b[" + std::to_string(b.size()) + "]");
  }
  const std::size_t n = x.rows(), p = x.cols(), q = w.cols();
  Matrix out(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * q;
    std::copy(b.begin(), b.end(), o);
    const double* xi = x.data() + i * p;
    for (std::size_t k = 0; k < p; ++k) {
      const double a = xi[k];
      if (a == 0.0) continue;
      const double* wk = w.data() + k * q;
      for (std::size_t j = 0; j < q; ++j) o[j] += a * wk[j];
    }
  }
  return out;
}

Matrix matmul_transposed_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_transposed_b: " + a.shape_string() + " vs " + b.shape_string());
  }
  const std::size_t n = a.rows(), m = b.rows(), p = a.cols();
  Matrix bt(p, m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < p; ++k) bt(k, j) = b(j, k);
  }
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * p;
    double* o = out.data() + i * m;
    for (std::size_t k = 0; k < p; ++k) {
      const double s = ai[k];
      if (s == 0.0) continue;
      const double* bk = bt.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * bk[j];
    }
  }
  return out;
}

Matrix matmul_transposed_a(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_transposed_a: " + a.shape_string() + " vs " + b.shape_string());
  }
  const std::size_t n = a.rows(), p = a.cols(), q = b.cols();
  Matrix out(p, q);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * p;
    const double* bi = b.data() + i * q;
    for (std::size_t k = 0; k < p; ++k) {
      const double s = ai[k];
      if (s == 0.0) continue;
      double* o = out.data() + k * q;
      for (std::size_t j = 0; j < q; ++j) o[j] += s * bi[j];
    }
  }
  return out;
}

void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dout, Matrix* dx,
                     Matrix& dw, std::vector<double>& db) {
  if (dout.rows() != x.rows() || dout.cols() != w.cols() || x.cols() != w.rows()) {
    throw DimensionError("affine_backward: x" + x.shape_string() + " w" + w.shape_string() +
                         " dout" + dout.shape_string());
  }
  dw = matmul_transposed_a(x, dout);
  db.assign(w.cols(), 0.0);
  for (std::size_t i = 0; i < dout.rows(); ++i) {
    const auto r = dout.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
  }
  if (dx != nullptr) *dx = matmul_transposed_b(dout, w);
}

Matrix activation(Activation kind, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  auto src = x.flat();
  auto dst = out.flat();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sigmoid(src[i]);
      break;
  }
  return out;
}

Matrix activation_backward(Activation kind, const Matrix& input, const Matrix& output,
                           const Matrix& dout) {
  require_same_shape(input, dout, "activation_backward");
  require_same_shape(output, dout, "activation_backward");
  Matrix dx(dout.rows(), dout.cols());
  auto in = input.flat();
  auto out = output.flat();
  auto g = dout.flat();
  auto d = dx.flat();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = in[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * out[i] * (1.0 - out[i]);
      break;
  }
  return dx;
}

}  // namespace ektf::numkit
