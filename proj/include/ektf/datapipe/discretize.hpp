// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

namespace ektf::datapipe {

/// Bucket of a numeric value: floor((ln x)^2) when x > 2, otherwise 1.
/// Throws DataError on NaN or infinity.
std::int64_t numeric_bucket(double x);

/// numeric_bucket as a vocabulary token.
std::string discretize_numeric(double x);

}  // namespace ektf::datapipe
