// SPDX-License-Identifier: Apache-2.0
#include "ektf/numkit/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ektf/error.hpp"

namespace ektf::numkit {

std::vector<double> numeric_gradient(const ScalarFn& f, std::span<const double> theta,
                                     double h) {
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> fd(theta.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = point[i];
    point[i] = orig + h;
    const double plus = f(point);
    point[i] = orig - h;
    const double minus = f(point);
    point[i] = orig;
    fd[i] = (plus - minus) / (2.0 * h);
  }
  return fd;
}

double grad_check(const ScalarFn& f, std::span<const double> theta,
                  std::span<const double> analytic, double h) {
  if (theta.size() != analytic.size()) {
    throw DimensionError("grad_check: theta and analytic gradient differ in length");
  }
  const auto fd = numeric_gradient(f, theta, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double err = std::abs(analytic[i] - fd[i]) / std::max(1.0, std::abs(fd[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace ektf::numkit
