#include "rforge/metrics.hpp"

#include <cmath>
#include <queue>

#include "rforge/error.hpp"
#include "rforge/spectral.hpp"

namespace rforge {

std::string to_string(ResilienceKind kind) {
  switch (kind) {
    case ResilienceKind::kConnectivity: return "R";
    case ResilienceKind::kSpectralRadius: return "sr";
    case ResilienceKind::kAlgebraicConnectivity: return "ac";
  }
  return "unknown";
}

std::string to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::kGlobalEfficiency: return "global";
    case UtilityKind::kLocalEfficiency: return "local";
    case UtilityKind::kNone: return "none";
  }
  return "unknown";
}

ResilienceKind parse_resilience_kind(const std::string& name) {
  if (name == "R") return ResilienceKind::kConnectivity;
  if (name == "sr") return ResilienceKind::kSpectralRadius;
  if (name == "ac") return ResilienceKind::kAlgebraicConnectivity;
  throw ParameterError("unknown resilience metric '" + name + "' (expected R|sr|ac)");
}

UtilityKind parse_utility_kind(const std::string& name) {
  if (name == "global") return UtilityKind::kGlobalEfficiency;
  if (name == "local") return UtilityKind::kLocalEfficiency;
  if (name == "none") return UtilityKind::kNone;
  throw ParameterError("unknown utility metric '" + name + "' (expected global|local|none)");
}

void ObjectiveConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (attack.recompute_every < 1) throw ParameterError("attack recompute interval must be >= 1");
}

double resilience_R(const Graph& g, const AttackStrategy& attack) {
  const std::size_t n = g.num_nodes();
  if (n == 0) return 0.0;
  std::size_t total = 0;
  for (std::size_t s : attack_component_sizes(g, attack)) total += s;
  // One rounding: sum_q |LCC_q| / N^2.
  return static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(n));
}

namespace {

void apply_adjacency(const Graph& g, std::span<const double> x, std::span<double> y) {
  for (std::size_t u = 0; u < g.num_nodes(); ++u) {
    double s = 0.0;
    for (NodeId v : g.neighbors(static_cast<NodeId>(u))) s += x[v];
    y[u] = s;
  }
}

void apply_laplacian(const Graph& g, std::span<const double> x, std::span<double> y) {
  for (std::size_t u = 0; u < g.num_nodes(); ++u) {
    double s = static_cast<double>(g.degree(static_cast<NodeId>(u))) * x[u];
    for (NodeId v : g.neighbors(static_cast<NodeId>(u))) s -= x[v];
    y[u] = s;
  }
}

std::vector<double> dense_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> a(n * n, 0.0);
  for (auto [u, v] : g.edges()) {
    a[u * n + v] = 1.0;
    a[v * n + u] = 1.0;
  }
  return a;
}

}  // namespace

double spectral_radius(const Graph& g, std::size_t dense_limit) {
  const std::size_t n = g.num_nodes();
  if (g.num_edges() == 0) return 0.0;
  if (n <= dense_limit) return spectral::symmetric_eigenvalues(dense_adjacency(g), n).back();
  return spectral::lanczos_extreme(
      n, [&g](std::span<const double> x, std::span<double> y) { apply_adjacency(g, x, y); },
      /*largest=*/true);
}

double algebraic_connectivity(const Graph& g, std::size_t dense_limit) {
  const std::size_t n = g.num_nodes();
  if (n < 2 || !g.is_connected()) return 0.0;
  if (n <= dense_limit) {
    std::vector<double> lap(n * n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      lap[u * n + u] = static_cast<double>(g.degree(static_cast<NodeId>(u)));
      for (NodeId v : g.neighbors(static_cast<NodeId>(u))) lap[u * n + v] = -1.0;
    }
    return spectral::symmetric_eigenvalues(std::move(lap), n)[1];
  }
  // The constant vector spans the null space of a connected graph's Laplacian.
  const std::vector<std::vector<double>> ones{
      std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n)))};
  return spectral::lanczos_extreme(
      n, [&g](std::span<const double> x, std::span<double> y) { apply_laplacian(g, x, y); },
      /*largest=*/false, ones);
}

double average_efficiency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  if (n < 2) return 0.0;
  std::vector<int> dist(n);
  std::vector<NodeId> frontier;
  frontier.reserve(n);
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    frontier.clear();
    frontier.push_back(static_cast<NodeId>(s));
    double row = 0.0;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const NodeId u = frontier[head];
      for (NodeId v : g.neighbors(u)) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          row += 1.0 / dist[v];
          frontier.push_back(v);
        }
      }
    }
    total += row;
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double global_efficiency(const Graph& g) {
  if (g.num_nodes() < 2) throw ParameterError("global efficiency needs at least 2 nodes");
  return average_efficiency(g);
}

double local_efficiency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = g.neighbors(static_cast<NodeId>(i));
    if (nbrs.size() < 2) continue;
    total += average_efficiency(g.induced_subgraph(nbrs));
  }
  return total / static_cast<double>(n);
}

double resilience(const Graph& g, const ObjectiveConfig& cfg) {
  switch (cfg.resilience) {
    case ResilienceKind::kConnectivity: return resilience_R(g, cfg.attack);
    case ResilienceKind::kSpectralRadius: return spectral_radius(g);
    case ResilienceKind::kAlgebraicConnectivity: return algebraic_connectivity(g);
  }
  throw ParameterError("unknown resilience kind");
}

double utility(const Graph& g, const ObjectiveConfig& cfg) {
  switch (cfg.utility) {
    case UtilityKind::kGlobalEfficiency: return global_efficiency(g);
    case UtilityKind::kLocalEfficiency: return local_efficiency(g);
    case UtilityKind::kNone: return 0.0;
  }
  throw ParameterError("unknown utility kind");
}

ObjectiveComponents evaluate_objective(const Graph& g, const ObjectiveConfig& cfg) {
  ObjectiveComponents out;
  if (cfg.alpha > 0.0) out.resilience = resilience(g, cfg);
  if (cfg.alpha < 1.0) out.utility = utility(g, cfg);
  out.value = cfg.alpha * out.resilience + (1.0 - cfg.alpha) * out.utility;
  if (!std::isfinite(out.value)) throw NumericError("objective is not finite");
  return out;
}

double combined_objective(const Graph& g, const ObjectiveConfig& cfg) {
  return evaluate_objective(g, cfg).value;
}

}  // namespace rforge
