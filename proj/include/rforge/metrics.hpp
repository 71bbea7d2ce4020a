#pragma once

#include <string>

#include "rforge/attack.hpp"
#include "rforge/graph.hpp"

namespace rforge {

enum class ResilienceKind { kConnectivity, kSpectralRadius, kAlgebraicConnectivity };
enum class UtilityKind { kGlobalEfficiency, kLocalEfficiency, kNone };

std::string to_string(ResilienceKind kind);
std::string to_string(UtilityKind kind);
// Accepts the CLI spellings: R|sr|ac and global|local|none.
ResilienceKind parse_resilience_kind(const std::string& name);
UtilityKind parse_utility_kind(const std::string& name);

// Weighted objective alpha * resilience + (1 - alpha) * utility.
struct ObjectiveConfig {
  double alpha = 0.5;
  ResilienceKind resilience = ResilienceKind::kConnectivity;
  UtilityKind utility = UtilityKind::kGlobalEfficiency;
  AttackStrategy attack{};

  void validate() const;
};

struct ObjectiveComponents {
  double resilience = 0.0;
  double utility = 0.0;
  double value = 0.0;
};

// Graphs above this size use Lanczos instead of the dense eigensolver.
inline constexpr std::size_t kDenseEigenLimit = 512;

// R(G): mean of the attack curve, (1/N) sum_q s(q).
double resilience_R(const Graph& g, const AttackStrategy& attack);
// Largest adjacency eigenvalue.
double spectral_radius(const Graph& g, std::size_t dense_limit = kDenseEigenLimit);
// Second smallest Laplacian eigenvalue; exactly 0 for disconnected graphs.
double algebraic_connectivity(const Graph& g, std::size_t dense_limit = kDenseEigenLimit);

// Mean inverse hop distance over ordered pairs, 1/inf = 0; zero below 2 nodes.
double average_efficiency(const Graph& g);
// Requires N >= 2. Equals average_efficiency since the ideal graph scores 1.
double global_efficiency(const Graph& g);
double local_efficiency(const Graph& g);

double resilience(const Graph& g, const ObjectiveConfig& cfg);
double utility(const Graph& g, const ObjectiveConfig& cfg);
ObjectiveComponents evaluate_objective(const Graph& g, const ObjectiveConfig& cfg);
double combined_objective(const Graph& g, const ObjectiveConfig& cfg);

}  // namespace rforge
