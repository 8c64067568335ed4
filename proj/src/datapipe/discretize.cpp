// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/discretize.hpp"

#include <cmath>

#include "ektf/error.hpp"

namespace ektf::datapipe {

std::int64_t numeric_bucket(double x) {
  if (!std::isfinite(x)) throw DataError("non-finite numeric value");
  if (x > 2.0) {
    const double l = std::log(x);
    return static_cast<std::int64_t>(std::floor(l * l));
  }
  return 1;
}

std::string discretize_numeric(double x) { return std::to_string(numeric_bucket(x)); }

}  // namespace ektf::datapipe
