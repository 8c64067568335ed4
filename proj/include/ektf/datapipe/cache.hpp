// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "ektf/datapipe/dataset.hpp"

namespace ektf::datapipe {

/// Binary cache of encoded train/val/test splits.
///
/// Layout (little-endian):
///   "EKTFDATA" magic, u32 version
///   u32 field count, per field: u32 name length, name bytes, u8 kind,
///     u8 role, u32 vocab size
///   u32 label name length, label name bytes
///   3 parts (train, val, test), each: u64 rows, u8 has_true_ctr,
///     rows*f u32 ids, rows u8 labels, [rows f64 true_ctr]
inline constexpr std::uint32_t kCacheVersion = 1;

void write_cache(const std::filesystem::path& path, const DatasetSplits& splits);
DatasetSplits read_cache(const std::filesystem::path& path);

}  // namespace ektf::datapipe
