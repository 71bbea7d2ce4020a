#pragma once

#include <string>
#include <vector>

#include "rforge/graph.hpp"

namespace rforge {

enum class AttackKind { kAdaptiveDegree, kAdaptiveBetweenness };

struct AttackStrategy {
  AttackKind kind = AttackKind::kAdaptiveDegree;
  // Betweenness is recomputed after every `recompute_every` removals. 1 is the
  // exact adaptive attack; larger values trade accuracy for speed on big graphs.
  int recompute_every = 1;
};

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

// Order in which the attack removes nodes: a permutation of V. At every step
// the node with the largest score on the surviving subgraph goes first, ties
// to the lowest id.
std::vector<NodeId> removal_sequence(const Graph& g, const AttackStrategy& strategy);

// s[q-1] = largest component fraction (over the original N) after the first q
// removals, q = 1..N. The last entry is always 0.
std::vector<double> attack_curve(const Graph& g, const AttackStrategy& strategy);

// Same curve as integer component sizes; attack_curve divides these by N.
std::vector<std::size_t> attack_component_sizes(const Graph& g,
                                                const AttackStrategy& strategy);

}  // namespace rforge
