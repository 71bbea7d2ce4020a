#pragma once

#include <random>
#include <span>
#include <vector>

#include "rforge/graph.hpp"
#include "rforge/nn/adam.hpp"
#include "rforge/nn/tensor.hpp"
#include "rforge/policy.hpp"
#include "rforge/rewiring.hpp"

namespace rforge {

struct PpoConfig {
  double clip_eps = 0.2;
  double dual_clip = 10.0;
  double gae_lambda = 0.95;
  double gamma = 1.0;
  // Transitions collected per update, split into minibatches for `epochs` passes.
  int batch = 256;
  int minibatch = 64;
  int epochs = 4;
  double lr = nn::kDefaultLearningRate;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  // <= 0 disables gradient-norm clipping.
  double max_grad_norm = 0.5;

  void validate() const;
};

struct Transition {
  Graph state;
  RewiringAction action;
  bool forced = false;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;  // scaled
  bool done = false;
};

struct AdvantageEstimate {
  std::vector<double> advantage;
  std::vector<double> returns;  // advantage + value
};

// GAE over one time-ordered stream; done[t] cuts the recursion after step t.
// `bootstrap` is the value of the state following the last step (ignored if
// that step is done).
AdvantageEstimate gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                 std::span<const char> done, double bootstrap, double gamma,
                                 double lambda);

// Shift to zero mean and scale to unit (population) standard deviation. A
// constant input becomes all zeros.
void normalize_advantages(std::vector<double>& adv);

// Per-sample dual-clip surrogate: min(r A, clip(r, 1-eps, 1+eps) A), and for
// A < 0 additionally floored at c * A.
nn::Tensor dual_clip_objective(const nn::Tensor& ratio, std::span<const double> advantages,
                               double clip_eps, double dual_clip);

struct PpoLoss {
  nn::Tensor total;
  nn::Tensor policy;
  nn::Tensor value;
  nn::Tensor entropy;
};

// Loss of one minibatch; `advantages` should already be normalized.
PpoLoss ppo_loss(const ActorCritic& model, std::span<const Transition* const> batch,
                 std::span<const double> advantages, std::span<const double> returns,
                 const PpoConfig& cfg);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct PpoOptimizers {
  nn::AdamState policy;
  nn::AdamState value;
};

// Runs cfg.epochs shuffled minibatch passes over the batch. Advantages are
// normalized here. Non-finite losses raise TrainingError.
UpdateStats ppo_update(ActorCritic& model, std::span<const Transition> batch,
                       const AdvantageEstimate& estimate, const PpoConfig& cfg,
                       PpoOptimizers& optimizers, std::mt19937_64& rng);

}  // namespace rforge
