// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ektf::numkit {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient of f at theta.
std::vector<double> numeric_gradient(const ScalarFn& f, std::span<const double> theta,
                                     double h);

/// max_i |analytic_i - fd_i| / max(1, |fd_i|) where fd is the central
/// difference with step h.
double grad_check(const ScalarFn& f, std::span<const double> theta,
                  std::span<const double> analytic, double h = 1e-5);

}  // namespace ektf::numkit
