// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ektf/datapipe/dataset.hpp"
#include "ektf/datapipe/vocab.hpp"

namespace ektf::datapipe {

struct CsvOptions {
  char delimiter = ',';
  std::vector<std::string> truthy = {"1"};
  std::vector<std::string> falsy = {"0"};
  /// Token substituted for empty cells in either field kind.
  std::string missing_token = "<missing>";
};

/// Per-field token columns after numeric discretization, before encoding.
struct RawTable {
  FeatureSchema schema;
  std::vector<std::vector<std::string>> columns;  // columns[field][row]
  std::vector<std::uint8_t> labels;

  std::size_t num_rows() const { return labels.size(); }
};

/// Reads a headered CSV. Errors (DataError) carry the 1-based line number:
/// missing schema columns, ragged rows, unparsable labels or numerics, NaN
/// numerics, and files with no data rows.
RawTable read_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                  const CsvOptions& options = {});

/// One vocabulary per field built from the given rows only.
std::vector<Vocab> build_vocabs(const RawTable& table, std::span<const std::size_t> rows,
                                std::uint32_t min_count);

/// Encodes the given rows with prebuilt vocabularies.
EncodedDataset encode(const RawTable& table, const std::vector<Vocab>& vocabs,
                      std::span<const std::size_t> rows);

struct IngestResult {
  EncodedDataset dataset;
  std::vector<Vocab> vocabs;
};

/// read_csv + vocabularies over every row + encode.
IngestResult ingest_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                        std::uint32_t min_count, const CsvOptions& options = {});

struct SplitIngestResult {
  DatasetSplits splits;
  std::vector<Vocab> vocabs;
};

/// Splits rows first and builds vocabularies from the train rows only, so
/// validation/test values absent from train encode as OOV.
SplitIngestResult ingest_csv_split(const std::filesystem::path& path,
                                   const FeatureSchema& schema, std::uint32_t min_count,
                                   const SplitFractions& fractions, std::uint64_t seed,
                                   const CsvOptions& options = {});

}  // namespace ektf::datapipe
