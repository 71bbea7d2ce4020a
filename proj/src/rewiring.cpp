#include "rforge/rewiring.hpp"

#include <json.hpp>

#include "rforge/error.hpp"

namespace rforge {

RewiringAction RewiringAction::inverse() const {
  if (terminate) return *this;
  // Rewired graph holds A-B and C-D; swapping A->B with C->D restores A-C, B-D.
  return swap({e1.tail, e2.tail}, {e1.head, e2.head});
}

std::string to_string(const RewiringAction& a) {
  if (a.terminate) return "terminate";
  return std::to_string(a.e1.tail) + "->" + std::to_string(a.e1.head) + " " +
         std::to_string(a.e2.tail) + "->" + std::to_string(a.e2.head);
}

namespace {

bool valid_id(const Graph& g, NodeId v) {
  return v >= 0 && static_cast<std::size_t>(v) < g.num_nodes();
}

// Rules for e2 = B->D given a valid e1 = A->C.
std::optional<std::string> partner_violation(const Graph& g, NodeId a, NodeId c, NodeId b,
                                             NodeId d) {
  if (b == a || b == c || d == a || d == c) return "nodes-not-distinct";
  if (g.has_edge(a, b)) return "AB-exists";
  if (g.has_edge(c, d)) return "CD-exists";
  if (g.has_edge(a, d)) return "AD-exists";
  if (g.has_edge(b, c)) return "BC-exists";
  return std::nullopt;
}

}  // namespace

std::optional<std::string> find_violation(const Graph& g, const RewiringAction& act) {
  if (act.terminate) return "terminate";
  const auto [a, c] = act.e1;
  const auto [b, d] = act.e2;
  if (!valid_id(g, a) || !valid_id(g, c) || a == c || !g.has_edge(a, c)) return "e1-not-edge";
  if (!valid_id(g, b) || !valid_id(g, d) || b == d || !g.has_edge(b, d)) return "e2-not-edge";
  return partner_violation(g, a, c, b, d);
}

std::vector<EdgeRef> feasible_partners(const Graph& g, EdgeRef e1) {
  if (!g.has_edge(e1.tail, e1.head)) {
    throw ContractError("e1 " + std::to_string(e1.tail) + "->" + std::to_string(e1.head) +
                        " is not an edge");
  }
  std::vector<EdgeRef> out;
  for (const EdgeRef& e2 : g.directed_edges()) {
    if (!partner_violation(g, e1.tail, e1.head, e2.tail, e2.head)) out.push_back(e2);
  }
  return out;
}

bool has_feasible_partner(const Graph& g, EdgeRef e1) {
  const std::size_t n = g.num_nodes();
  for (std::size_t b = 0; b < n; ++b) {
    for (NodeId d : g.neighbors(static_cast<NodeId>(b))) {
      if (!partner_violation(g, e1.tail, e1.head, static_cast<NodeId>(b), d)) return true;
    }
  }
  return false;
}

std::size_t action_space_size(const Graph& g) {
  std::size_t count = 0;
  const auto dir = g.directed_edges();
  for (const EdgeRef& e1 : dir) {
    for (const EdgeRef& e2 : dir) {
      if (!partner_violation(g, e1.tail, e1.head, e2.tail, e2.head)) ++count;
    }
  }
  return count;
}

std::size_t action_space_upper_bound(const Graph& g) {
  const std::size_t directed = 2 * g.num_edges();
  return 2 * directed * directed;
}

void apply_rewiring_in_place(Graph& g, const RewiringAction& a) {
  if (auto rule = find_violation(g, a)) {
    throw FeasibilityError(*rule, to_string(a));
  }
  g.remove_edge(a.e1.tail, a.e1.head);
  g.remove_edge(a.e2.tail, a.e2.head);
  g.add_edge(a.e1.tail, a.e2.tail);
  g.add_edge(a.e1.head, a.e2.head);
}

Graph apply_rewiring(const Graph& g, const RewiringAction& a, bool forbid_disconnecting) {
  Graph out = g;
  apply_rewiring_in_place(out, a);
  if (forbid_disconnecting && !out.is_connected()) {
    throw FeasibilityError("disconnects", to_string(a));
  }
  return out;
}

std::optional<RewiringAction> sample_feasible_rewiring(const Graph& g, std::mt19937_64& rng) {
  const auto dir = g.directed_edges();
  if (dir.size() < 2) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, dir.size() - 1);
  constexpr int kRejectionTries = 64;
  for (int t = 0; t < kRejectionTries; ++t) {
    const EdgeRef e1 = dir[pick(rng)];
    const EdgeRef e2 = dir[pick(rng)];
    if (!partner_violation(g, e1.tail, e1.head, e2.tail, e2.head)) {
      return RewiringAction::swap(e1, e2);
    }
  }
  std::vector<RewiringAction> all;
  for (const EdgeRef& e1 : dir) {
    for (const EdgeRef& e2 : dir) {
      if (!partner_violation(g, e1.tail, e1.head, e2.tail, e2.head)) {
        all.push_back(RewiringAction::swap(e1, e2));
      }
    }
  }
  if (all.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick_all(0, all.size() - 1);
  return all[pick_all(rng)];
}

void EnvConfig::validate() const {
  objective.validate();
  if (max_rewiring_budget < 1) throw ParameterError("rewiring budget must be >= 1");
  if (!(reward_scale > 0.0)) throw ParameterError("reward scale must be positive");
}

StepResult step(const Graph& state, const RewiringAction& a, const EnvConfig& cfg,
                int steps_taken, std::optional<ObjectiveComponents> current) {
  if (steps_taken >= cfg.max_rewiring_budget) {
    throw ContractError("step called after the rewiring budget was exhausted");
  }
  StepResult r;
  r.before = current ? *current : evaluate_objective(state, cfg.objective);
  if (a.terminate) {
    r.next_graph = state;
    r.after = r.before;
    r.reward = 0.0;
    r.done = true;
    return r;
  }
  r.next_graph = apply_rewiring(state, a, cfg.forbid_disconnecting);
  r.after = evaluate_objective(r.next_graph, cfg.objective);
  r.reward = cfg.reward_scale * (r.after.value - r.before.value);
  r.done = steps_taken + 1 >= cfg.max_rewiring_budget;
  return r;
}

RewiringEnv::RewiringEnv(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

const Graph& RewiringEnv::reset(Graph initial) {
  initial_ = std::move(initial);
  state_ = initial_;
  initial_objective_ = evaluate_objective(state_, cfg_.objective);
  current_ = initial_objective_;
  steps_ = 0;
  done_ = false;
  return state_;
}

StepResult RewiringEnv::step(const RewiringAction& a) {
  if (done_) throw ContractError("episode is done; call reset()");
  StepResult r = rforge::step(state_, a, cfg_, steps_, current_);
  state_ = r.next_graph;
  current_ = r.after;
  if (!a.terminate) ++steps_;
  done_ = r.done;
  return r;
}

std::string episode_log_line(int t, const RewiringAction& a, const StepResult& r) {
  nlohmann::json action;
  if (a.terminate) {
    action = {{"terminate", true}};
  } else {
    action = {{"terminate", false},
              {"e1", {a.e1.tail, a.e1.head}},
              {"e2", {a.e2.tail, a.e2.head}}};
  }
  nlohmann::json line = {
      {"t", t},
      {"action", action},
      {"reward", r.reward},
      {"objective_components",
       {{"before", {{"resilience", r.before.resilience},
                    {"utility", r.before.utility},
                    {"value", r.before.value}}},
        {"after", {{"resilience", r.after.resilience},
                   {"utility", r.after.utility},
                   {"value", r.after.value}}}}},
  };
  return line.dump();
}

}  // namespace rforge
