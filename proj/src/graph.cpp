#include "rforge/graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>

#include "rforge/error.hpp"

namespace rforge {

Graph::Graph(std::size_t n) : adjacency_(n) {}

Graph Graph::from_edges(std::size_t n,
                        std::span<const std::pair<NodeId, NodeId>> edges) {
  Graph g(n);
  for (auto [u, v] : edges) g.add_edge(u, v);
  return g;
}

void Graph::check_node(NodeId u) const {
  if (u < 0 || static_cast<std::size_t>(u) >= adjacency_.size()) {
    throw ContractError("node id " + std::to_string(u) + " out of range [0, " +
                        std::to_string(adjacency_.size()) + ")");
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u == v) return false;
  return pairs_.contains(key(u, v));
}

void Graph::add_edge(NodeId u, NodeId v) {
  check_node(u);
  check_node(v);
  if (u == v) throw ContractError("self-loop on node " + std::to_string(u));
  if (!pairs_.insert(key(u, v)).second) {
    throw ContractError("duplicate edge {" + std::to_string(u) + ", " +
                        std::to_string(v) + "}");
  }
  auto insert_sorted = [](std::vector<NodeId>& list, NodeId x) {
    list.insert(std::lower_bound(list.begin(), list.end(), x), x);
  };
  insert_sorted(adjacency_[u], v);
  insert_sorted(adjacency_[v], u);
  ++num_edges_;
}

void Graph::remove_edge(NodeId u, NodeId v) {
  check_node(u);
  check_node(v);
  if (pairs_.erase(key(u, v)) == 0) {
    throw ContractError("edge {" + std::to_string(u) + ", " + std::to_string(v) +
                        "} not present");
  }
  auto erase_sorted = [](std::vector<NodeId>& list, NodeId x) {
    list.erase(std::lower_bound(list.begin(), list.end(), x));
  };
  erase_sorted(adjacency_[u], v);
  erase_sorted(adjacency_[v], u);
  --num_edges_;
}

void Graph::remove_node(NodeId u) {
  check_node(u);
  const std::vector<NodeId> nbrs = adjacency_[u];
  for (NodeId v : nbrs) remove_edge(u, v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges_);
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (static_cast<NodeId>(u) < v) out.emplace_back(static_cast<NodeId>(u), v);
    }
  }
  return out;
}

std::vector<EdgeRef> Graph::directed_edges() const {
  std::vector<EdgeRef> out;
  out.reserve(2 * num_edges_);
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    for (NodeId v : adjacency_[u]) out.push_back({static_cast<NodeId>(u), v});
  }
  return out;
}

std::vector<std::size_t> Graph::degree_sequence() const {
  std::vector<std::size_t> out(adjacency_.size());
  for (std::size_t u = 0; u < adjacency_.size(); ++u) out[u] = adjacency_[u].size();
  return out;
}

bool Graph::is_connected() const {
  if (adjacency_.size() <= 1) return true;
  std::vector<bool> alive(adjacency_.size(), true);
  return largest_cc_size(*this, alive) == adjacency_.size();
}

Graph Graph::induced_subgraph(std::span<const NodeId> nodes) const {
  std::vector<NodeId> index(adjacency_.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    check_node(nodes[i]);
    if (index[nodes[i]] != -1) throw ContractError("repeated node in subgraph list");
    index[nodes[i]] = static_cast<NodeId>(i);
  }
  Graph sub(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (NodeId v : adjacency_[nodes[i]]) {
      const NodeId j = index[v];
      if (j > static_cast<NodeId>(i)) sub.add_edge(static_cast<NodeId>(i), j);
    }
  }
  return sub;
}

Graph Graph::permuted(std::span<const NodeId> perm) const {
  if (perm.size() != adjacency_.size()) {
    throw ContractError("permutation length does not match node count");
  }
  Graph out(adjacency_.size());
  for (auto [u, v] : edges()) out.add_edge(perm[u], perm[v]);
  return out;
}

Graph complete_graph(std::size_t n) {
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      g.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }
  return g;
}

Graph star_graph(std::size_t n) {
  Graph g(n);
  for (std::size_t v = 1; v < n; ++v) g.add_edge(0, static_cast<NodeId>(v));
  return g;
}

Graph path_graph(std::size_t n) {
  Graph g(n);
  for (std::size_t v = 1; v < n; ++v) {
    g.add_edge(static_cast<NodeId>(v - 1), static_cast<NodeId>(v));
  }
  return g;
}

Graph cycle_graph(std::size_t n) {
  Graph g = path_graph(n);
  if (n >= 3) g.add_edge(static_cast<NodeId>(n - 1), 0);
  return g;
}

Graph ba_generate(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw ParameterError("BA model needs m >= 1");
  if (n < m + 1) {
    throw ParameterError("BA model needs n >= m + 1 (n=" + std::to_string(n) +
                         ", m=" + std::to_string(m) + ")");
  }
  Graph g = complete_graph(m + 1);
  Graph out(n);
  for (auto [u, v] : g.edges()) out.add_edge(u, v);

  // Each node appears once per unit of degree, so a uniform draw from this
  // list is a degree-proportional draw.
  std::vector<NodeId> endpoints;
  endpoints.reserve(2 * (m * (m + 1) / 2 + m * (n - m - 1)));
  for (auto [u, v] : out.edges()) {
    endpoints.push_back(u);
    endpoints.push_back(v);
  }

  std::mt19937_64 rng(seed);
  std::vector<NodeId> targets;
  for (std::size_t node = m + 1; node < n; ++node) {
    targets.clear();
    std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
    while (targets.size() < m) {
      const NodeId t = endpoints[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) {
        targets.push_back(t);
      }
    }
    for (NodeId t : targets) {
      out.add_edge(static_cast<NodeId>(node), t);
      endpoints.push_back(t);
      endpoints.push_back(static_cast<NodeId>(node));
    }
  }
  return out;
}

Graph random_walk_sample(const Graph& g, std::size_t target_n, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  if (target_n > n) {
    throw ParameterError("sample size " + std::to_string(target_n) +
                         " exceeds node count " + std::to_string(n));
  }
  if (target_n == 0) return Graph(0);

  constexpr int kMaxRestarts = 10;
  const std::size_t step_cap = 100 * n;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> start_dist(0, n - 1);

  for (int attempt = 0; attempt <= kMaxRestarts; ++attempt) {
    std::vector<bool> seen(n, false);
    std::vector<NodeId> order;
    order.reserve(target_n);
    NodeId cur = static_cast<NodeId>(start_dist(rng));
    seen[cur] = true;
    order.push_back(cur);
    for (std::size_t step = 0; step < step_cap && order.size() < target_n; ++step) {
      const auto nbrs = g.neighbors(cur);
      if (nbrs.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
      cur = nbrs[pick(rng)];
      if (!seen[cur]) {
        seen[cur] = true;
        order.push_back(cur);
      }
    }
    if (order.size() == target_n) return g.induced_subgraph(order);
  }
  throw SamplingError("random walk did not reach " + std::to_string(target_n) +
                      " distinct nodes after " + std::to_string(kMaxRestarts) +
                      " restarts");
}

std::size_t largest_cc_size(const Graph& g, const std::vector<bool>& alive) {
  const std::size_t n = g.num_nodes();
  std::vector<bool> visited(n, false);
  std::vector<NodeId> stack;
  std::size_t best = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!alive[s] || visited[s]) continue;
    std::size_t size = 0;
    visited[s] = true;
    stack.push_back(static_cast<NodeId>(s));
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      ++size;
      for (NodeId v : g.neighbors(u)) {
        if (alive[v] && !visited[v]) {
          visited[v] = true;
          stack.push_back(v);
        }
      }
    }
    best = std::max(best, size);
  }
  return best;
}

double largest_cc_fraction(const Graph& g, std::span<const NodeId> removed) {
  const std::size_t n = g.num_nodes();
  if (n == 0) return 0.0;
  std::vector<bool> alive(n, true);
  for (NodeId v : removed) {
    if (v < 0 || static_cast<std::size_t>(v) >= n) {
      throw ContractError("removed node out of range");
    }
    alive[v] = false;
  }
  return static_cast<double>(largest_cc_size(g, alive)) / static_cast<double>(n);
}

std::vector<double> betweenness(const Graph& g, const std::vector<bool>& alive_in) {
  const std::size_t n = g.num_nodes();
  const std::vector<bool> alive = alive_in.empty() ? std::vector<bool>(n, true) : alive_in;
  std::vector<double> score(n, 0.0);
  std::vector<NodeId> order;
  std::vector<std::vector<NodeId>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<int> dist(n);
  std::queue<NodeId> queue;

  for (std::size_t s = 0; s < n; ++s) {
    if (!alive[s]) continue;
    order.clear();
    for (std::size_t v = 0; v < n; ++v) {
      preds[v].clear();
      sigma[v] = 0.0;
      delta[v] = 0.0;
      dist[v] = -1;
    }
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push(static_cast<NodeId>(s));
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop();
      order.push_back(u);
      for (NodeId w : g.neighbors(u)) {
        if (!alive[w]) continue;
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          queue.push(w);
        }
        if (dist[w] == dist[u] + 1) {
          sigma[w] += sigma[u];
          preds[w].push_back(u);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId w = *it;
      for (NodeId u : preds[w]) delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
      if (w != static_cast<NodeId>(s)) score[w] += delta[w];
    }
  }
  // Every unordered pair was counted from both endpoints.
  for (double& x : score) x *= 0.5;
  return score;
}

Graph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::unordered_map<long long, NodeId> ids;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;

  auto compact = [&](long long raw) {
    auto [it, inserted] = ids.try_emplace(raw, static_cast<NodeId>(ids.size()));
    return it->second;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long long a = 0, b = 0;
    std::string extra;
    if (!(fields >> a >> b)) throw ParseError(line_no, "expected two integer node ids");
    if (fields >> extra) throw ParseError(line_no, "unexpected trailing token '" + extra + "'");
    if (a < 0 || b < 0) throw ParseError(line_no, "negative node id");
    if (a == b) throw ParseError(line_no, "self-loop on node " + std::to_string(a));
    const NodeId u = compact(a);
    const NodeId v = compact(b);
    const std::uint64_t k = (static_cast<std::uint64_t>(std::min(u, v)) << 32) |
                            static_cast<std::uint32_t>(std::max(u, v));
    if (!seen.insert(k).second) {
      throw ParseError(line_no, "duplicate edge " + std::to_string(a) + " " +
                                    std::to_string(b));
    }
    edges.emplace_back(u, v);
  }
  return Graph::from_edges(ids.size(), edges);
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_edge_list(buffer.str());
}

std::string format_edge_list(const Graph& g) {
  std::ostringstream out;
  out << "# nodes " << g.num_nodes() << " edges " << g.num_edges() << "\n";
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
  return out.str();
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(0, "cannot write " + path.string());
  out << format_edge_list(g);
}

}  // namespace rforge
