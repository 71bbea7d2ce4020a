#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rforge/baselines.hpp"
#include "rforge/graph.hpp"
#include "rforge/policy.hpp"
#include "rforge/ppo.hpp"
#include "rforge/rewiring.hpp"

namespace rforge {

struct TrainConfig {
  EnvConfig env{};
  PpoConfig ppo{};
  std::uint64_t seed = 0;
  long total_steps = 200000;
  int num_envs = 8;
  // Greedy evaluation on the training graphs every this many updates; the
  // best-scoring weights are kept (the latest among equals).
  int eval_every = 1;
};

struct TrainLogRow {
  int update = 0;
  long env_steps = 0;
  // Mean gain (%) of the episodes completed during this update's rollout.
  double mean_gain = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  // Mean greedy-decoded gain (%) on the training graphs, if evaluated.
  double eval_gain = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double best_eval_gain = 0.0;
  int best_update = 0;
  long env_steps = 0;
};

using TrainCallback = std::function<void(const TrainLogRow&)>;

// PPO on episodes that cycle through `graphs`. On return the model holds the
// weights with the best greedy evaluation seen.
TrainResult train(ActorCritic& model, std::span<const Graph> graphs, const TrainConfig& cfg,
                  const TrainCallback& on_update = {});

// Greedy-decoded episode from g; the report describes the final graph.
OptimizerReport evaluate_policy(const ActorCritic& model, const Graph& g, const EnvConfig& cfg);

// Steps whose action exactly undoes the previous step's action.
int count_reversals(std::span<const RewiringAction> actions);

// CSV with header update,mean_gain,policy_loss,value_loss,entropy.
std::string format_training_log(std::span<const TrainLogRow> log);

}  // namespace rforge
