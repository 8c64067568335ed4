// SPDX-License-Identifier: Apache-2.0
#include "ektf/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "ektf/binary_io.hpp"
#include "ektf/error.hpp"

namespace ektf::model {
namespace {
constexpr char kMagic[8] = {'E', 'K', 'T', 'F', 'C', 'K', 'P', 'T'};
}

void write_checkpoint(const std::filesystem::path& path, const EnsembleModel& model,
                      std::uint64_t schema_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  const auto params = model.parameters();
  out.write(kMagic, sizeof(kMagic));
  io::write_le(out, kCheckpointVersion);
  io::write_le(out, schema_hash);
  io::write_le(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    io::write_string(out, p->name);
    io::write_le(out, static_cast<std::uint64_t>(p->value.rows()));
    io::write_le(out, static_cast<std::uint64_t>(p->value.cols()));
    for (double v : p->value.flat()) io::write_f64(out, v);
  }
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

void read_checkpoint(const std::filesystem::path& path, EnsembleModel& model,
                     std::uint64_t schema_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw DataError("'" + path.string() + "' is not a checkpoint");
  }
  if (const auto v = io::read_le<std::uint32_t>(in); v != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(v));
  }
  if (io::read_le<std::uint64_t>(in) != schema_hash) {
    throw DataError("checkpoint was written for a different dataset schema");
  }
  auto params = model.parameters();
  if (io::read_le<std::uint32_t>(in) != params.size()) {
    throw DataError("checkpoint parameter count does not match the model");
  }
  for (auto* p : params) {
    const std::string name = io::read_string(in);
    const auto rows = io::read_le<std::uint64_t>(in);
    const auto cols = io::read_le<std::uint64_t>(in);
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw DataError("checkpoint parameter '" + name + "' does not match '" + p->name + "' " +
                      p->value.shape_string());
    }
    for (auto& v : p->value.flat()) v = io::read_f64(in);
  }
}

}  // namespace ektf::model
