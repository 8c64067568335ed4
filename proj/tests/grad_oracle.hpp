// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite-difference oracle for the full model: embeddings, student weights
// and (for concat fusion) the combiner head.

#include <optional>
#include <vector>

#include "ektf/datapipe/dataset.hpp"
#include "ektf/model/ensemble.hpp"
#include "ektf/numkit/grad_check.hpp"
#include "ektf/objective/objective.hpp"

namespace ektf::testing {

inline std::vector<double> flatten_values(model::EnsembleModel& m) {
  std::vector<double> out;
  for (auto* p : m.parameters()) out.insert(out.end(), p->value.flat().begin(), p->value.flat().end());
  return out;
}

inline std::vector<double> flatten_grads(model::EnsembleModel& m) {
  std::vector<double> out;
  for (auto* p : m.parameters()) out.insert(out.end(), p->grad.flat().begin(), p->grad.flat().end());
  return out;
}

inline void load_values(model::EnsembleModel& m, std::span<const double> theta) {
  std::size_t off = 0;
  for (auto* p : m.parameters()) {
    for (auto& v : p->value.flat()) v = theta[off++];
  }
}

inline std::optional<objective::ConcatHeadView> head_of(const model::EnsembleModel& m) {
  if (const auto* h = m.concat_head()) {
    return objective::ConcatHeadView{h->weight.value.flat(), h->bias.value(0, 0)};
  }
  return std::nullopt;
}

/// Max relative error between backprop and central differences of the
/// objective with weights and transfer targets frozen at the current point.
inline double full_model_grad_error(model::EnsembleModel& m, const objective::ObjectiveSpec& spec,
                                    const datapipe::Batch& batch, double h = 1e-5) {
  m.zero_grad();
  auto fwd = m.forward(batch);
  const objective::StudentOutputs outputs{fwd.logits, fwd.probs};
  const auto frozen = objective::freeze(spec, outputs, batch.labels);
  auto head = head_of(m);
  const auto loss = objective::total_loss(spec, outputs, batch.labels, head ? &*head : nullptr,
                                          &frozen);
  m.backward(batch, fwd, loss.dlogits);
  if (auto* hp = m.concat_head(); hp != nullptr && !loss.dhead_weights.empty()) {
    for (std::size_t k = 0; k < loss.dhead_weights.size(); ++k) hp->weight.grad(k, 0) += loss.dhead_weights[k];
    hp->bias.grad(0, 0) += loss.dhead_bias;
  }
  const auto analytic = flatten_grads(m);
  const auto theta = flatten_values(m);

  model::EnsembleModel probe = m;
  const auto f = [&](std::span<const double> t) {
    load_values(probe, t);
    auto pf = probe.forward(batch);
    const objective::StudentOutputs po{pf.logits, pf.probs};
    auto ph = head_of(probe);
    return objective::total_loss(spec, po, batch.labels, ph ? &*ph : nullptr, &frozen).total;
  };
  return numkit::grad_check(f, theta, analytic, h);
}

}  // namespace ektf::testing
