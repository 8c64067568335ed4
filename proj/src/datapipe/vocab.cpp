// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/vocab.hpp"

#include <algorithm>

#include "ektf/error.hpp"

namespace ektf::datapipe {

Vocab Vocab::build(std::span<const std::string> tokens, std::uint32_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  std::unordered_map<std::string_view, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];

  std::vector<std::pair<std::string_view, std::uint64_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocab vocab;
  vocab.min_count_ = min_count;
  vocab.tokens_.reserve(kept.size());
  for (const auto& [token, count] : kept) {
    vocab.tokens_.emplace_back(token);
    vocab.ids_.emplace(vocab.tokens_.back(), static_cast<std::uint32_t>(vocab.tokens_.size()));
  }
  return vocab;
}

std::uint32_t Vocab::encode(std::string_view token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kOovId : it->second;
}

const std::string& Vocab::token(std::uint32_t id) const {
  if (id == kOovId || id > tokens_.size()) {
    throw UsageError("vocab id " + std::to_string(id) + " has no unique token");
  }
  return tokens_[id - 1];
}

}  // namespace ektf::datapipe
