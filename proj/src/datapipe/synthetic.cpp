// SPDX-License-Identifier: Apache-2.0
#include "ektf/datapipe/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "ektf/error.hpp"
#include "ektf/numkit/kernels.hpp"
#include "ektf/numkit/rng.hpp"

namespace ektf::datapipe {

double SyntheticModel::logit(std::span<const std::uint32_t> row) const {
  double z = base_logit;
  for (std::size_t j = 0; j < field_bias.size(); ++j) z += field_bias[j][row[j]];
  if (interaction_strength != 0.0) {
    double inter = 0.0;
    for (const auto& [a, b] : pairs) {
      const double* ua = factors[a].data() + row[a] * rank;
      const double* ub = factors[b].data() + row[b] * rank;
      double dot = 0.0;
      for (std::size_t r = 0; r < rank; ++r) dot += ua[r] * ub[r];
      inter += dot;
    }
    z += interaction_strength * inter;
  }
  return z;
}

SyntheticData synthesize(const SyntheticConfig& config, std::uint64_t seed) {
  const std::size_t f = config.num_fields;
  if (f == 0 || config.num_rows == 0) throw ConfigError("synthetic sizes must be at least 1");
  if (config.vocab_sizes.size() != 1 && config.vocab_sizes.size() != f) {
    throw ConfigError("synthetic vocab_sizes needs 1 or num_fields entries");
  }
  if (config.interaction_rank == 0) throw ConfigError("interaction rank must be at least 1");

  SyntheticData out;
  auto& ds = out.dataset;
  for (std::size_t j = 0; j < f; ++j) {
    const auto s = config.vocab_sizes.size() == 1 ? config.vocab_sizes[0] : config.vocab_sizes[j];
    if (s == 0) throw ConfigError("synthetic vocab sizes must be at least 1");
    ds.vocab_sizes.push_back(s);
    ds.schema.fields.push_back({"f" + std::to_string(j), FieldKind::kCategorical,
                                j % 3 == 0 ? FieldRole::kUser
                                           : (j % 3 == 1 ? FieldRole::kItem : FieldRole::kContext)});
  }
  ds.schema.label_column = "label";

  // Separate streams keep coefficients stable when num_rows changes.
  numkit::Rng coef_rng(numkit::Rng::derive(seed, 1));
  numkit::Rng row_rng(numkit::Rng::derive(seed, 2));

  auto& model = out.model;
  model.base_logit = config.base_logit;
  model.interaction_strength = config.interaction_strength;
  model.rank = config.interaction_rank;
  for (std::size_t j = 0; j < f; ++j) {
    std::vector<double> bias(ds.vocab_sizes[j]);
    for (auto& b : bias) b = config.bias_scale * coef_rng.normal();
    model.field_bias.push_back(std::move(bias));
  }

  std::vector<std::pair<std::size_t, std::size_t>> all_pairs;
  for (std::size_t a = 0; a < f; ++a) {
    for (std::size_t b = a + 1; b < f; ++b) all_pairs.emplace_back(a, b);
  }
  coef_rng.shuffle(std::span(all_pairs));
  all_pairs.resize(std::min(all_pairs.size(), config.num_pairs));
  std::sort(all_pairs.begin(), all_pairs.end());
  model.pairs = std::move(all_pairs);

  // Entries have variance 1/sqrt(rank) so each pair's dot product has unit variance.
  const double factor_std = std::pow(static_cast<double>(model.rank), -0.25);
  for (std::size_t j = 0; j < f; ++j) {
    std::vector<double> u(static_cast<std::size_t>(ds.vocab_sizes[j]) * model.rank);
    for (auto& v : u) v = factor_std * coef_rng.normal();
    model.factors.push_back(std::move(u));
  }

  const std::size_t n = config.num_rows;
  ds.ids.resize(n * f);
  ds.labels.resize(n);
  ds.true_ctr.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto* row = ds.ids.data() + i * f;
    for (std::size_t j = 0; j < f; ++j) {
      row[j] = static_cast<std::uint32_t>(row_rng.uniform_int(ds.vocab_sizes[j]));
    }
    const double p = numkit::sigmoid(model.logit({row, f}));
    ds.true_ctr[i] = p;
    ds.labels[i] = row_rng.bernoulli(p) ? 1 : 0;
  }
  return out;
}

}  // namespace ektf::datapipe
