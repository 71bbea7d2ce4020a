#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rforge/graph.hpp"
#include "rforge/metrics.hpp"
#include "rforge/rewiring.hpp"

namespace rforge {

// An objective change counts as an improvement only above this margin, so
// round-off between isomorphic graphs never registers as progress.
inline constexpr double kImprovementEpsilon = 1e-12;
// Search stops after this many consecutive non-improving objective calls.
inline constexpr long kEarlyStopWindow = 1000;

struct OptimizerReport {
  std::string algorithm;
  Graph best_graph;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double gain_percent = 0.0;
  int rewirings_used = 0;
  long objective_evals = 0;
  double wall_time = 0.0;
  // Replaying these on the input reproduces best_graph.
  std::vector<RewiringAction> rewirings;
  // Best objective after every objective call (index 0 is the input).
  std::vector<double> best_trace;
};

// 100 * (final - initial) / |initial|; 0 when both are 0.
double gain_percent(double initial, double final_value);

struct SearchConfig {
  EnvConfig env{};
  std::uint64_t seed = 0;
  // Cap on objective calls, guarding against runs that keep finding tiny
  // gains. The early-stop window usually triggers first.
  long max_evals = 200000;
};

OptimizerReport hill_climb(const Graph& g, const SearchConfig& cfg);

struct AnnealingSchedule {
  // <= 0 selects the default 0.01 * |objective(g)|.
  double initial_temperature = 0.0;
  double decay = 0.995;
};

OptimizerReport simulated_annealing(const Graph& g, const SearchConfig& cfg,
                                    AnnealingSchedule schedule = {});

// Metropolis acceptance: always for delta >= 0, else exp(delta / T).
bool metropolis_accept(double delta, double temperature, std::mt19937_64& rng);

OptimizerReport greedy(const Graph& g, const EnvConfig& cfg);

// One greedy decision: the feasible swap with the largest objective gain, ties
// to the lexicographically smallest (A, C, B, D). nullopt when no swap gains.
// `evaluations`, when given, is increased by the objective calls made.
struct GreedyChoice {
  RewiringAction action;
  double objective = 0.0;
  long evaluations = 0;
};
std::optional<GreedyChoice> greedy_step(const Graph& g, const ObjectiveConfig& objective,
                                        double current_objective,
                                        bool forbid_disconnecting = false,
                                        long* evaluations = nullptr);

struct EvolutionConfig {
  int pop_size = 10;
  int generations = 200;
};

OptimizerReport evolutionary(const Graph& g, const SearchConfig& cfg,
                             EvolutionConfig evo = {});

// Replays a rewiring list. Throws FeasibilityError on a bad entry.
Graph replay(const Graph& g, const std::vector<RewiringAction>& actions);

}  // namespace rforge
