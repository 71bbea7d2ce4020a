#include "rforge/attack.hpp"

#include <algorithm>
#include <numeric>

#include "rforge/error.hpp"

namespace rforge {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kAdaptiveDegree: return "degree";
    case AttackKind::kAdaptiveBetweenness: return "betweenness";
  }
  return "unknown";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "degree") return AttackKind::kAdaptiveDegree;
  if (name == "betweenness") return AttackKind::kAdaptiveBetweenness;
  throw ParameterError("unknown attack '" + name + "' (expected degree|betweenness)");
}

namespace {

std::vector<NodeId> degree_sequence_attack(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> deg = g.degree_sequence();
  std::vector<bool> alive(n, true);
  std::vector<NodeId> order;
  order.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    NodeId best = -1;
    for (std::size_t v = 0; v < n; ++v) {
      if (alive[v] && (best < 0 || deg[v] > deg[best])) best = static_cast<NodeId>(v);
    }
    alive[best] = false;
    order.push_back(best);
    for (NodeId u : g.neighbors(best)) {
      if (alive[u]) --deg[u];
    }
  }
  return order;
}

std::vector<NodeId> betweenness_attack(const Graph& g, int recompute_every) {
  if (recompute_every < 1) throw ParameterError("recompute_every must be >= 1");
  const std::size_t n = g.num_nodes();
  std::vector<bool> alive(n, true);
  std::vector<NodeId> order;
  order.reserve(n);
  std::vector<double> score;
  for (std::size_t step = 0; step < n; ++step) {
    if (step % static_cast<std::size_t>(recompute_every) == 0) score = betweenness(g, alive);
    NodeId best = -1;
    for (std::size_t v = 0; v < n; ++v) {
      // Scores equal up to summation round-off count as ties.
      if (alive[v] && (best < 0 || score[v] > score[best] + 1e-9 * std::max(1.0, score[best]))) {
        best = static_cast<NodeId>(v);
      }
    }
    alive[best] = false;
    order.push_back(best);
  }
  return order;
}

// Union-find used to replay removals backwards as insertions.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return size_[a];
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return size_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

std::vector<NodeId> removal_sequence(const Graph& g, const AttackStrategy& strategy) {
  if (strategy.recompute_every < 1) throw ParameterError("recompute_every must be >= 1");
  switch (strategy.kind) {
    case AttackKind::kAdaptiveDegree: return degree_sequence_attack(g);
    case AttackKind::kAdaptiveBetweenness:
      return betweenness_attack(g, strategy.recompute_every);
  }
  throw ParameterError("unknown attack kind");
}

std::vector<std::size_t> attack_component_sizes(const Graph& g,
                                                const AttackStrategy& strategy) {
  const std::size_t n = g.num_nodes();
  const std::vector<NodeId> order = removal_sequence(g, strategy);
  std::vector<std::size_t> sizes(n, 0);
  DisjointSets sets(n);
  std::vector<bool> present(n, false);
  std::size_t largest = 0;
  // After q removals the survivors are order[q..n-1]; insert them in reverse.
  for (std::size_t q = n; q >= 1; --q) {
    sizes[q - 1] = largest;
    const NodeId v = order[q - 1];
    present[v] = true;
    largest = std::max<std::size_t>(largest, 1);
    for (NodeId u : g.neighbors(v)) {
      if (present[u]) largest = std::max(largest, sets.unite(v, u));
    }
  }
  return sizes;
}

std::vector<double> attack_curve(const Graph& g, const AttackStrategy& strategy) {
  const std::vector<std::size_t> sizes = attack_component_sizes(g, strategy);
  std::vector<double> curve(sizes.size());
  const double n = static_cast<double>(g.num_nodes());
  for (std::size_t i = 0; i < sizes.size(); ++i) curve[i] = static_cast<double>(sizes[i]) / n;
  return curve;
}

}  // namespace rforge
