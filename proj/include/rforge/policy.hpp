#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rforge/firegnn.hpp"
#include "rforge/graph.hpp"
#include "rforge/nn/parameters.hpp"
#include "rforge/rewiring.hpp"

namespace rforge {

struct PolicyConfig {
  FireGnnConfig encoder{};
};

// One decision of the autoregressive policy on one state.
struct PolicyDecision {
  RewiringAction action;
  // No directed edge had a feasible partner, so stopping was the only option.
  bool forced = false;
  double log_prob = 0.0;
  double value = 0.0;
  double terminate_prob = 0.0;
};

// Head probabilities on a single state, for inspection and exact enumeration.
struct HeadDistributions {
  double terminate_prob = 0.0;
  std::vector<EdgeRef> directed_edges;
  // Directed edges with at least one feasible partner.
  std::vector<bool> eligible;
  // Pointer distribution over directed_edges before orientation randomization.
  std::vector<double> first;
  // Distribution over directed_edges for the second pick, given `first_edge`.
  std::vector<double> second;
};

// Batched re-evaluation of stored actions, with gradients.
struct ActionEvaluation {
  nn::Tensor log_prob;  // B x 1
  nn::Tensor entropy;   // B x 1
  nn::Tensor value;     // B x 1
};

// Policy (terminate head, two pointer heads) and value head, each on its own
// FireGNN encoder. The two parameter sets are optimized separately.
class ActorCritic {
 public:
  ActorCritic(const PolicyConfig& cfg, std::uint64_t seed);
  ActorCritic(const ActorCritic&) = delete;
  ActorCritic& operator=(const ActorCritic&) = delete;

  const PolicyConfig& config() const { return cfg_; }
  nn::ParameterSet& policy_params() { return policy_params_; }
  nn::ParameterSet& value_params() { return value_params_; }
  const nn::ParameterSet& policy_params() const { return policy_params_; }
  const nn::ParameterSet& value_params() const { return value_params_; }
  const FireGnn& policy_encoder() const { return policy_encoder_; }

  // Samples (rng given) or greedily decodes (rng null) one action per graph.
  // Runs without recording a tape.
  std::vector<PolicyDecision> act(std::span<const Graph* const> graphs, std::mt19937_64* rng) const;

  HeadDistributions distributions(const Graph& g, std::optional<EdgeRef> first_edge) const;

  // log P(action | state), entropy and value for each (state, action).
  ActionEvaluation evaluate(std::span<const Graph* const> graphs,
                            std::span<const RewiringAction> actions,
                            std::span<const char> forced) const;

  nn::Tensor values(std::span<const Graph* const> graphs) const;

 private:
  struct Mlp {
    nn::Tensor w1, b1, w2, b2;
    nn::Tensor operator()(const nn::Tensor& x) const;
  };
  struct Pointer {
    nn::Tensor query, key, v;
  };
  Mlp make_mlp(nn::ParameterSet& set, const std::string& name, std::size_t in, std::size_t out,
               std::mt19937_64& rng);
  Pointer make_pointer(nn::ParameterSet& set, const std::string& name, std::mt19937_64& rng);
  // Pointer scores: one per edge row, with edge_owner[i] the row of `queries` to use.
  nn::Tensor pointer_scores(const Pointer& p, const nn::Tensor& queries, const nn::Tensor& edges,
                            std::span<const int> edge_owner) const;
  // Edge rows of the selected samples, concatenated with per-sample segments.
  struct EdgeSelection {
    std::vector<int> rows;
    std::vector<int> owner;
    std::vector<std::size_t> offsets;
  };
  static EdgeSelection select_edges(const BatchEmbeddings& emb, std::span<const std::size_t> samples);
  nn::Tensor first_log_probs(const nn::Tensor& graph_rows, const nn::Tensor& edge_rows,
                             const EdgeSelection& sel, const std::vector<bool>& mask) const;
  nn::Tensor second_log_probs(const nn::Tensor& graph_rows, const nn::Tensor& first_rows,
                              const nn::Tensor& edge_rows, const EdgeSelection& sel,
                              const std::vector<bool>& mask) const;

  PolicyConfig cfg_;
  nn::ParameterSet policy_params_;
  nn::ParameterSet value_params_;
  std::mt19937_64 init_rng_;
  FireGnn policy_encoder_;
  FireGnn value_encoder_;
  Mlp terminate_head_, first_head_, second_head_, value_head_;
  Pointer first_pointer_, second_pointer_;
};

// Directed edges whose feasible-partner set is non-empty.
std::vector<bool> first_edge_mask(const Graph& g, std::span<const EdgeRef> directed);

}  // namespace rforge
