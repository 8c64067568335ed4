// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ektf::datapipe {

/// Token to id map for one field. Id 0 is the shared out-of-vocabulary
/// bucket; tokens seen fewer than `min_count` times fall into it, as do
/// tokens never seen while building.
class Vocab {
 public:
  static constexpr std::uint32_t kOovId = 0;

  Vocab() = default;

  /// Frequent tokens get ids 1.. ordered by descending count, ties by
  /// token bytes.
  static Vocab build(std::span<const std::string> tokens, std::uint32_t min_count);

  std::uint32_t encode(std::string_view token) const;
  /// Raw token for a non-OOV id.
  const std::string& token(std::uint32_t id) const;

  /// Number of ids including OOV.
  std::uint32_t size() const { return static_cast<std::uint32_t>(tokens_.size()) + 1; }
  std::uint32_t min_count() const { return min_count_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> ids_;
  std::vector<std::string> tokens_;  // tokens_[id - 1]
  std::uint32_t min_count_ = 1;
};

}  // namespace ektf::datapipe
