#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace rforge {

using NodeId = std::int32_t;

// Directed orientation of an undirected edge {tail, head}.
struct EdgeRef {
  NodeId tail = 0;
  NodeId head = 0;

  EdgeRef reversed() const { return {head, tail}; }

  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
  friend auto operator<=>(const EdgeRef&, const EdgeRef&) = default;
};

// Undirected simple graph on nodes 0..n-1.
//
// Neighbor lists are kept sorted; a packed pair set answers has_edge in O(1).
// Copies are independent values. Mutation (add_edge, remove_edge,
// remove_node) needs exclusive access; const access is thread-safe.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n);

  static Graph from_edges(std::size_t n,
                          std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t num_nodes() const { return adjacency_.size(); }
  std::size_t num_edges() const { return num_edges_; }

  bool has_edge(NodeId u, NodeId v) const;
  std::size_t degree(NodeId u) const { return adjacency_[u].size(); }
  std::span<const NodeId> neighbors(NodeId u) const { return adjacency_[u]; }

  // Throws ContractError on self-loops, duplicates, or out-of-range ids.
  void add_edge(NodeId u, NodeId v);
  void remove_edge(NodeId u, NodeId v);
  // Drops every edge incident to u. The node id stays valid (isolated).
  void remove_node(NodeId u);

  // Undirected edges as (u, v) with u < v, lexicographically sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;
  // Both orientations of every edge, sorted by (tail, head).
  std::vector<EdgeRef> directed_edges() const;
  std::vector<std::size_t> degree_sequence() const;

  bool is_connected() const;
  // Induced subgraph on `nodes`, relabeled so nodes[i] becomes i.
  Graph induced_subgraph(std::span<const NodeId> nodes) const;
  // Relabel: node v becomes perm[v].
  Graph permuted(std::span<const NodeId> perm) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.adjacency_ == b.adjacency_;
  }

 private:
  static std::uint64_t key(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
  }
  void check_node(NodeId u) const;

  std::vector<std::vector<NodeId>> adjacency_;
  std::unordered_set<std::uint64_t> pairs_;
  std::size_t num_edges_ = 0;
};

// Complete graph K_n.
Graph complete_graph(std::size_t n);
// Star with hub 0 and n-1 leaves.
Graph star_graph(std::size_t n);
// Path 0-1-...-(n-1).
Graph path_graph(std::size_t n);
// Cycle 0-1-...-(n-1)-0.
Graph cycle_graph(std::size_t n);

// Barabasi-Albert graph grown from a complete seed graph on m+1 nodes; every
// later node attaches to m distinct existing nodes with probability
// proportional to their current degree. Requires m >= 1 and n >= m + 1.
Graph ba_generate(std::size_t n, std::size_t m, std::uint64_t seed);

// Induced subgraph on the first `target_n` distinct nodes of a simple random
// walk, relabeled in visit order. A walk gets 100*n steps; after that it
// restarts from a fresh node, at most 10 times, before raising SamplingError.
Graph random_walk_sample(const Graph& g, std::size_t target_n, std::uint64_t seed);

// Size of the largest connected component of g minus `removed`, divided by
// the original node count. Zero when nothing survives.
double largest_cc_fraction(const Graph& g, std::span<const NodeId> removed);

// Largest connected component size restricted to nodes with alive[v] set.
std::size_t largest_cc_size(const Graph& g, const std::vector<bool>& alive);

// Exact shortest-path betweenness (Brandes), unnormalized, counting each
// unordered pair once. Nodes with alive[v] == false are ignored entirely;
// an empty mask means every node is alive.
std::vector<double> betweenness(const Graph& g, const std::vector<bool>& alive = {});

// Whitespace separated integer pairs, one edge per line; `#` comments.
// Ids are compacted to 0..n-1 in first-appearance order.
Graph load_edge_list(const std::filesystem::path& path);
Graph parse_edge_list(const std::string& text);
void save_edge_list(const Graph& g, const std::filesystem::path& path);
std::string format_edge_list(const Graph& g);

}  // namespace rforge
