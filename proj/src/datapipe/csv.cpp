// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ektf/datapipe/discretize.hpp"
#include "ektf/error.hpp"

namespace ektf::datapipe {
namespace {

// Splits one line; double-quoted cells may contain the delimiter and "" escapes.
std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

DataError line_error(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
  return DataError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

RawTable read_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                  const CsvOptions& options) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError("CSV file '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line, options.delimiter);
  for (auto& h : header) h = trim(h);

  const auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw line_error(path, 1, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> field_cols;
  for (const auto& f : schema.fields) field_cols.push_back(column_of(f.name));
  const std::size_t label_col = column_of(schema.label_column);

  RawTable table;
  table.schema = schema;
  table.columns.resize(schema.num_fields());

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, options.delimiter);
    if (cells.size() != header.size()) {
      throw line_error(path, line_no,
                       "expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()));
    }

    const std::string label = trim(cells[label_col]);
    std::uint8_t y;
    if (std::find(options.truthy.begin(), options.truthy.end(), label) != options.truthy.end()) {
      y = 1;
    } else if (std::find(options.falsy.begin(), options.falsy.end(), label) !=
               options.falsy.end()) {
      y = 0;
    } else {
      throw line_error(path, line_no, "unparsable label '" + label + "'");
    }
    table.labels.push_back(y);

    for (std::size_t j = 0; j < schema.num_fields(); ++j) {
      std::string cell = trim(cells[field_cols[j]]);
      if (cell.empty()) {
        table.columns[j].push_back(options.missing_token);
        continue;
      }
      if (schema.fields[j].kind == FieldKind::kNumeric) {
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
          throw line_error(path, line_no,
                           "unparsable numeric '" + cell + "' in field '" +
                               schema.fields[j].name + "'");
        }
        if (!std::isfinite(x)) {
          throw line_error(path, line_no,
                           "non-finite numeric in field '" + schema.fields[j].name + "'");
        }
        cell = discretize_numeric(x);
      }
      table.columns[j].push_back(std::move(cell));
    }
  }
  if (table.labels.empty()) throw DataError("CSV file '" + path.string() + "' has no data rows");
  return table;
}

std::vector<Vocab> build_vocabs(const RawTable& table, std::span<const std::size_t> rows,
                                std::uint32_t min_count) {
  std::vector<Vocab> vocabs;
  vocabs.reserve(table.columns.size());
  std::vector<std::string> tokens;
  for (const auto& column : table.columns) {
    tokens.clear();
    tokens.reserve(rows.size());
    for (std::size_t r : rows) tokens.push_back(column[r]);
    vocabs.push_back(Vocab::build(tokens, min_count));
  }
  return vocabs;
}

EncodedDataset encode(const RawTable& table, const std::vector<Vocab>& vocabs,
                      std::span<const std::size_t> rows) {
  if (vocabs.size() != table.columns.size()) throw UsageError("one vocab per field required");
  EncodedDataset ds;
  ds.schema = table.schema;
  for (const auto& v : vocabs) ds.vocab_sizes.push_back(v.size());
  const std::size_t f = table.columns.size();
  ds.ids.reserve(rows.size() * f);
  ds.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < f; ++j) ds.ids.push_back(vocabs[j].encode(table.columns[j][r]));
    ds.labels.push_back(table.labels[r]);
  }
  return ds;
}

IngestResult ingest_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                        std::uint32_t min_count, const CsvOptions& options) {
  const RawTable table = read_csv(path, schema, options);
  std::vector<std::size_t> all(table.num_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  IngestResult result;
  result.vocabs = build_vocabs(table, all, min_count);
  result.dataset = encode(table, result.vocabs, all);
  return result;
}

SplitIngestResult ingest_csv_split(const std::filesystem::path& path,
                                   const FeatureSchema& schema, std::uint32_t min_count,
                                   const SplitFractions& fractions, std::uint64_t seed,
                                   const CsvOptions& options) {
  const RawTable table = read_csv(path, schema, options);
  const auto idx = split_indices(table.num_rows(), fractions, seed);
  SplitIngestResult result;
  result.vocabs = build_vocabs(table, idx.train, min_count);
  result.splits.train = encode(table, result.vocabs, idx.train);
  result.splits.val = encode(table, result.vocabs, idx.val);
  result.splits.test = encode(table, result.vocabs, idx.test);
  return result;
}

}  // namespace ektf::datapipe
