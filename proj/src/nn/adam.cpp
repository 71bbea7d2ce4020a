#include "rforge/nn/adam.hpp"

#include <algorithm>
#include <cmath>

#include "rforge/error.hpp"

namespace rforge::nn {

double linear_decay_lr(double initial, long step, long total_steps) {
  if (total_steps <= 0) throw ParameterError("learning-rate schedule needs a positive length");
  const double frac = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
  return initial * (1.0 - frac);
}

void adam_step(ParameterSet& params, AdamState& state) {
  auto& entries = params.entries();
  const bool any_grad = std::any_of(entries.begin(), entries.end(),
                                    [](const NamedParameter& p) { return !p.tensor.grad().empty(); });
  if (!any_grad) throw ContractError("adam_step called before any gradient was computed");

  if (state.first_moment.size() != entries.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : entries) {
      state.first_moment.emplace_back(p.tensor.size(), 0.0);
      state.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
  }
  ++state.step_count;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto values = entries[i].tensor.mutable_values();
    const auto grad = entries[i].tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      values[j] -= state.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.eps);
    }
  }
}

}  // namespace rforge::nn
