// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>

#include "ektf/model/ensemble.hpp"

namespace ektf::model {

/// Checkpoint layout (little-endian):
///   "EKTFCKPT" magic, u32 version, u64 schema hash, u32 parameter count,
///   then per parameter: u32 name length, name bytes, u64 rows, u64 cols,
///   rows*cols f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const EnsembleModel& model,
                      std::uint64_t schema_hash);

/// Loads values into a model built with the same configuration. Throws
/// DataError on a hash, name or shape mismatch.
void read_checkpoint(const std::filesystem::path& path, EnsembleModel& model,
                     std::uint64_t schema_hash);

}  // namespace ektf::model
