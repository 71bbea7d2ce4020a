#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rforge/graph.hpp"
#include "rforge/nn/ops.hpp"
#include "rforge/nn/parameters.hpp"

namespace rforge {

// Nested subgraphs obtained by repeatedly deleting the highest-degree node
// (ties to the lowest id). levels.front() is the smallest subgraph and
// levels.back() the input graph. Removed nodes stay as isolated ids.
struct FiltratedGraph {
  int order = 0;
  std::vector<Graph> levels;
  // removal_order[j] is deleted from levels[order - j] to give levels[order - j - 1].
  std::vector<NodeId> removal_order;
  std::vector<std::vector<bool>> present;
  std::vector<std::vector<bool>> non_isolated;

  std::size_t node_count(std::size_t level) const;
};

// order must lie in [0, N-1].
FiltratedGraph build_filtration(const Graph& g, int order);

inline constexpr std::size_t kPositionalDims = 8;
inline constexpr std::size_t kNodeFeatureDims = 1 + kPositionalDims;

// Transformer-style sinusoidal code of an integer position, base 10000.
std::array<double, kPositionalDims> sinusoidal_encoding(std::size_t position);

// Row-major N x 9 features of the present nodes of one level: degree divided
// by the level's max degree, then the sinusoidal code of the node's degree
// rank (number of present nodes with strictly larger degree). Rows of absent
// nodes are zero.
std::vector<double> node_features(const Graph& level, const std::vector<bool>& present);

struct FireGnnConfig {
  std::size_t hidden = 64;
  int layers = 5;
  // Filtration order K; each graph uses min(order, N - 1).
  int order = 5;
};

// Embeddings for a batch of graphs. Graph b owns node rows
// [node_offsets[b], node_offsets[b+1]) and edge rows
// [edge_offsets[b], edge_offsets[b+1]), the latter in directed_edges() order.
struct BatchEmbeddings {
  nn::Tensor node;
  nn::Tensor edge;
  nn::Tensor graph;
  std::vector<std::size_t> node_offsets;
  std::vector<std::size_t> edge_offsets;
  // Cross-level attention weights (rows x levels, masked levels are 0).
  nn::Tensor node_attention;
  nn::Tensor edge_attention;
  nn::Tensor graph_attention;
};

// Present nodes of a set of (graph, level) pairs stacked into one disjoint
// union: one row per present node, contiguous per pair.
struct LevelBatch {
  std::vector<std::size_t> segment_offsets;
  // For each row: owning segment and node id within its graph.
  std::vector<std::size_t> row_segment;
  std::vector<NodeId> row_node;
  std::shared_ptr<const nn::SparsePattern> adjacency;
  nn::Tensor features;
};

LevelBatch make_level_batch(std::span<const Graph* const> levels,
                            std::span<const std::vector<bool>* const> present);

// Filtration-enhanced GIN encoder. Registers its weights into a caller-owned
// ParameterSet under `prefix`.
class FireGnn {
 public:
  FireGnn(const FireGnnConfig& cfg, nn::ParameterSet& params, const std::string& prefix,
          std::mt19937_64& rng);

  const FireGnnConfig& config() const { return cfg_; }
  int effective_order(const Graph& g) const;

  // Node embeddings of every row of a level batch (GIN layers + jumping
  // knowledge projection).
  nn::Tensor gin_forward(const LevelBatch& batch) const;

  // Per-level endpoint pair -> edge embedding MLP over [h_i + h_j || h_i - h_j].
  nn::Tensor edge_mlp(const nn::Tensor& tails, const nn::Tensor& heads) const;

  // Full filtration pipeline. Throws ContractError for an edgeless graph.
  BatchEmbeddings forward(std::span<const Graph* const> graphs) const;
  BatchEmbeddings forward(const Graph& g) const;

  // The same encoder on the input graph alone, without any filtration logic.
  BatchEmbeddings forward_plain(std::span<const Graph* const> graphs) const;

 private:
  struct Layer {
    nn::Tensor eps, w1, b1, w2, b2, gain, bias, shift;
  };

  BatchEmbeddings encode(std::span<const Graph* const> graphs, bool use_filtration) const;

  FireGnnConfig cfg_;
  std::vector<Layer> layers_;
  nn::Tensor jk_w_, jk_b_;
  nn::Tensor edge_w1_, edge_b1_, edge_w2_, edge_b2_;
  nn::Tensor node_score_, edge_score_, graph_score_;
  nn::Tensor isolated_w_, isolated_b_;
};

}  // namespace rforge
