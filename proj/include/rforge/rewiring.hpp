#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rforge/graph.hpp"
#include "rforge/metrics.hpp"

namespace rforge {

// Either "stop", or the swap that removes A-C and B-D and adds A-B and C-D,
// written as e1 = A->C, e2 = B->D.
struct RewiringAction {
  bool terminate = false;
  EdgeRef e1{};
  EdgeRef e2{};

  static RewiringAction stop() { return {true, {}, {}}; }
  static RewiringAction swap(EdgeRef e1, EdgeRef e2) { return {false, e1, e2}; }

  // The action that undoes this one on the rewired graph: A->B, C->D.
  RewiringAction inverse() const;

  friend bool operator==(const RewiringAction&, const RewiringAction&) = default;
};

std::string to_string(const RewiringAction& a);

// Name of the first violated feasibility rule, or nullopt if `a` is a valid
// swap on g. Rule names: "terminate", "e1-not-edge", "e2-not-edge",
// "nodes-not-distinct", "AB-exists", "CD-exists", "AD-exists", "BC-exists".
std::optional<std::string> find_violation(const Graph& g, const RewiringAction& a);

// Every directed B->D that forms a feasible swap with e1, sorted.
std::vector<EdgeRef> feasible_partners(const Graph& g, EdgeRef e1);
bool has_feasible_partner(const Graph& g, EdgeRef e1);

// Number of ordered (directed e1, directed e2) feasible pairs.
std::size_t action_space_size(const Graph& g);
// 2 |E_dir|^2 with |E_dir| = 2M: the action-space size as tabulated for the
// benchmark datasets.
std::size_t action_space_upper_bound(const Graph& g);

// E' = E - {AC, BD} + {AB, CD}. Throws FeasibilityError naming the broken
// rule; with forbid_disconnecting, a disconnected result is rejected too
// (rule "disconnects").
Graph apply_rewiring(const Graph& g, const RewiringAction& a, bool forbid_disconnecting = false);
void apply_rewiring_in_place(Graph& g, const RewiringAction& a);

// Uniformly random feasible (e1, e2), or nullopt when no swap exists.
// Rejection-samples ordered pairs first and falls back to full enumeration.
std::optional<RewiringAction> sample_feasible_rewiring(const Graph& g, std::mt19937_64& rng);

struct EnvConfig {
  ObjectiveConfig objective{};
  int max_rewiring_budget = 20;
  double reward_scale = 10.0;
  bool forbid_disconnecting = false;

  void validate() const;
};

struct StepResult {
  Graph next_graph;
  double reward = 0.0;  // scaled
  bool done = false;
  ObjectiveComponents before{};
  ObjectiveComponents after{};
};

// One MDP transition. `steps_taken` is the number of rewirings already done
// in this episode; the episode ends on terminate or when the budget is used.
// `current` may carry the cached objective of `state`.
StepResult step(const Graph& state, const RewiringAction& a, const EnvConfig& cfg,
                int steps_taken, std::optional<ObjectiveComponents> current = std::nullopt);

// Stateful episode runner around step().
class RewiringEnv {
 public:
  explicit RewiringEnv(EnvConfig cfg);

  const Graph& reset(Graph initial);
  StepResult step(const RewiringAction& a);

  const Graph& state() const { return state_; }
  const Graph& initial() const { return initial_; }
  const EnvConfig& config() const { return cfg_; }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }
  double initial_objective() const { return initial_objective_.value; }
  double current_objective() const { return current_.value; }

 private:
  EnvConfig cfg_;
  Graph initial_;
  Graph state_;
  ObjectiveComponents initial_objective_{};
  ObjectiveComponents current_{};
  int steps_ = 0;
  bool done_ = true;
};

// One JSON line of an episode log: {t, action, reward, objective_components}.
std::string episode_log_line(int t, const RewiringAction& a, const StepResult& r);

}  // namespace rforge
