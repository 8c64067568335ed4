// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/cache.hpp"

#include <cstring>
#include <fstream>

#include "ektf/binary_io.hpp"
#include "ektf/error.hpp"

namespace ektf::datapipe {
namespace {

constexpr char kMagic[8] = {'E', 'K', 'T', 'F', 'D', 'A', 'T', 'A'};

void write_part(std::ostream& out, const EncodedDataset& ds) {
  io::write_le(out, static_cast<std::uint64_t>(ds.num_rows()));
  io::write_le(out, static_cast<std::uint8_t>(ds.has_true_ctr() ? 1 : 0));
  for (auto id : ds.ids) io::write_le(out, id);
  for (auto y : ds.labels) io::write_le(out, y);
  for (double p : ds.true_ctr) io::write_f64(out, p);
}

EncodedDataset read_part(std::istream& in, const FeatureSchema& schema,
                         const std::vector<std::uint32_t>& vocab_sizes) {
  EncodedDataset ds;
  ds.schema = schema;
  ds.vocab_sizes = vocab_sizes;
  const auto rows = io::read_le<std::uint64_t>(in);
  const bool has_ctr = io::read_le<std::uint8_t>(in) != 0;
  const std::uint64_t n_ids = rows * schema.num_fields();
  if (rows > (1ULL << 40)) throw DataError("corrupt dataset cache: row count");
  ds.ids.resize(n_ids);
  for (auto& id : ds.ids) id = io::read_le<std::uint32_t>(in);
  ds.labels.resize(rows);
  for (auto& y : ds.labels) y = io::read_le<std::uint8_t>(in);
  if (has_ctr) {
    ds.true_ctr.resize(rows);
    for (auto& p : ds.true_ctr) p = io::read_f64(in);
  }
  ds.validate();
  return ds;
}

}  // namespace

void write_cache(const std::filesystem::path& path, const DatasetSplits& splits) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dataset cache '" + path.string() + "'");
  const auto& ref = splits.train;
  out.write(kMagic, sizeof(kMagic));
  io::write_le(out, kCacheVersion);
  io::write_le(out, static_cast<std::uint32_t>(ref.num_fields()));
  for (std::size_t j = 0; j < ref.num_fields(); ++j) {
    const auto& f = ref.schema.fields[j];
    io::write_string(out, f.name);
    io::write_le(out, static_cast<std::uint8_t>(f.kind));
    io::write_le(out, static_cast<std::uint8_t>(f.role));
    io::write_le(out, ref.vocab_sizes[j]);
  }
  io::write_string(out, ref.schema.label_column);
  write_part(out, splits.train);
  write_part(out, splits.val);
  write_part(out, splits.test);
  if (!out) throw DataError("failed writing dataset cache '" + path.string() + "'");
}

DatasetSplits read_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset cache '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw DataError("'" + path.string() + "' is not a dataset cache");
  }
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kCacheVersion) {
    throw DataError("unsupported dataset cache version " + std::to_string(version));
  }
  FeatureSchema schema;
  std::vector<std::uint32_t> vocab_sizes;
  const auto f = io::read_le<std::uint32_t>(in);
  for (std::uint32_t j = 0; j < f; ++j) {
    FieldSpec spec;
    spec.name = io::read_string(in);
    spec.kind = static_cast<FieldKind>(io::read_le<std::uint8_t>(in));
    spec.role = static_cast<FieldRole>(io::read_le<std::uint8_t>(in));
    schema.fields.push_back(std::move(spec));
    vocab_sizes.push_back(io::read_le<std::uint32_t>(in));
  }
  schema.label_column = io::read_string(in);
  DatasetSplits splits;
  splits.train = read_part(in, schema, vocab_sizes);
  splits.val = read_part(in, schema, vocab_sizes);
  splits.test = read_part(in, schema, vocab_sizes);
  return splits;
}

}  // namespace ektf::datapipe
