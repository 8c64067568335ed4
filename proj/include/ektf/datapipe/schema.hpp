// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ektf::datapipe {

enum class FieldKind : std::uint8_t { kCategorical = 0, kNumeric = 1 };
enum class FieldRole : std::uint8_t { kUser = 0, kItem = 1, kContext = 2 };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
  FieldRole role = FieldRole::kContext;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

/// Ordered feature fields plus the name of the binary label column.
struct FeatureSchema {
  std::vector<FieldSpec> fields;
  std::string label_column = "label";

  std::size_t num_fields() const { return fields.size(); }
  /// Throws ConfigError unless names are unique, non-empty and distinct
  /// from the label, and at least one field exists.
  void validate() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

std::string_view to_string(FieldKind kind);
std::string_view to_string(FieldRole role);
FieldKind parse_field_kind(std::string_view text);
FieldRole parse_field_role(std::string_view text);

/// Parses "name:kind:role" (role optional, defaults to context).
FieldSpec parse_field_spec(std::string_view text);

/// FNV-1a over field names, kinds, roles, label and vocabulary sizes.
/// Checkpoints store it to refuse loading against a different encoding.
std::uint64_t schema_hash(const FeatureSchema& schema,
                          const std::vector<std::uint32_t>& vocab_sizes);

}  // namespace ektf::datapipe
