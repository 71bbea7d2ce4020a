#pragma once

#include <vector>

#include "rforge/nn/parameters.hpp"

namespace rforge::nn {

inline constexpr double kDefaultLearningRate = 7e-4;

struct AdamState {
  double lr = kDefaultLearningRate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Learning rate falling linearly from `initial` at step 0 to 0 at total_steps.
double linear_decay_lr(double initial, long step, long total_steps);

// One bias-corrected Adam update using state.lr. A parameter with no gradient
// is treated as having a zero gradient; throws ContractError if no parameter
// in the set has received a gradient at all.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace rforge::nn
