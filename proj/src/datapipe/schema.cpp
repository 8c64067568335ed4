// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/schema.hpp"

#include <set>

#include "ektf/error.hpp"

namespace ektf::datapipe {

void FeatureSchema::validate() const {
  if (fields.empty()) throw ConfigError("schema has no feature fields");
  if (label_column.empty()) throw ConfigError("schema has no label column");
  std::set<std::string> seen;
  for (const auto& f : fields) {
    if (f.name.empty()) throw ConfigError("schema field with empty name");
    if (f.name == label_column) {
      throw ConfigError("field '" + f.name + "' is also the label column");
    }
    if (!seen.insert(f.name).second) throw ConfigError("duplicate field name '" + f.name + "'");
  }
}

std::string_view to_string(FieldKind kind) {
  return kind == FieldKind::kNumeric ? "numeric" : "categorical";
}

std::string_view to_string(FieldRole role) {
  switch (role) {
    case FieldRole::kUser: return "user";
    case FieldRole::kItem: return "item";
    case FieldRole::kContext: return "context";
  }
  return "context";
}

FieldKind parse_field_kind(std::string_view text) {
  if (text == "categorical") return FieldKind::kCategorical;
  if (text == "numeric") return FieldKind::kNumeric;
  throw ConfigError("unknown field kind '" + std::string(text) + "'");
}

FieldRole parse_field_role(std::string_view text) {
  if (text == "user") return FieldRole::kUser;
  if (text == "item") return FieldRole::kItem;
  if (text == "context") return FieldRole::kContext;
  throw ConfigError("unknown field role '" + std::string(text) + "'");
}

FieldSpec parse_field_spec(std::string_view text) {
  const auto first = text.find(':');
  if (first == std::string_view::npos || first == 0) {
    throw ConfigError("field spec '" + std::string(text) + "' is not name:kind[:role]");
  }
  FieldSpec spec;
  spec.name = std::string(text.substr(0, first));
  auto rest = text.substr(first + 1);
  const auto second = rest.find(':');
  spec.kind = parse_field_kind(rest.substr(0, second));
  if (second != std::string_view::npos) spec.role = parse_field_role(rest.substr(second + 1));
  return spec;
}

namespace {

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void fnv_u32(std::uint64_t& h, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 24)};
  fnv_bytes(h, bytes, 4);
}

void fnv_string(std::uint64_t& h, const std::string& s) {
  fnv_u32(h, static_cast<std::uint32_t>(s.size()));
  fnv_bytes(h, s.data(), s.size());
}

}  // namespace

std::uint64_t schema_hash(const FeatureSchema& schema,
                          const std::vector<std::uint32_t>& vocab_sizes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv_u32(h, static_cast<std::uint32_t>(schema.fields.size()));
  for (const auto& f : schema.fields) {
    fnv_string(h, f.name);
    fnv_u32(h, static_cast<std::uint32_t>(f.kind));
    fnv_u32(h, static_cast<std::uint32_t>(f.role));
  }
  fnv_string(h, schema.label_column);
  for (auto s : vocab_sizes) fnv_u32(h, s);
  return h;
}

}  // namespace ektf::datapipe
