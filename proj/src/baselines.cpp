#include "rforge/baselines.hpp"

#include <chrono>
#include <cmath>

#include "rforge/error.hpp"

namespace rforge {

double gain_percent(double initial, double final_value) {
  if (initial == 0.0) {
    if (final_value == 0.0) return 0.0;
    return final_value > 0.0 ? INFINITY : -INFINITY;
  }
  return 100.0 * (final_value - initial) / std::fabs(initial);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void finish(OptimizerReport& r, Clock::time_point start) {
  r.final_objective = r.best_trace.back();
  r.gain_percent = gain_percent(r.initial_objective, r.final_objective);
  r.rewirings_used = static_cast<int>(r.rewirings.size());
  r.wall_time = seconds_since(start);
}

// nullopt when the swap disconnects the graph and that is forbidden.
std::optional<Graph> try_rewire(const Graph& g, const RewiringAction& a, bool forbid) {
  Graph out = apply_rewiring(g, a);
  if (forbid && !out.is_connected()) return std::nullopt;
  return out;
}

OptimizerReport start_report(const std::string& name, const Graph& g, double objective) {
  OptimizerReport r;
  r.algorithm = name;
  r.best_graph = g;
  r.initial_objective = objective;
  r.objective_evals = 1;
  r.best_trace.push_back(objective);
  return r;
}

}  // namespace

Graph replay(const Graph& g, const std::vector<RewiringAction>& actions) {
  Graph out = g;
  for (const auto& a : actions) apply_rewiring_in_place(out, a);
  return out;
}

OptimizerReport hill_climb(const Graph& g, const SearchConfig& cfg) {
  cfg.env.validate();
  const auto start = Clock::now();
  const ObjectiveConfig& obj = cfg.env.objective;
  OptimizerReport r = start_report("hc", g, combined_objective(g, obj));
  std::mt19937_64 rng(cfg.seed);

  Graph current = g;
  double current_value = r.initial_objective;
  long stale = 0;
  while (static_cast<int>(r.rewirings.size()) < cfg.env.max_rewiring_budget &&
         stale < kEarlyStopWindow && r.objective_evals < cfg.max_evals) {
    const auto action = sample_feasible_rewiring(current, rng);
    if (!action) break;
    auto candidate = try_rewire(current, *action, cfg.env.forbid_disconnecting);
    if (!candidate) {
      ++stale;
      continue;
    }
    const double value = combined_objective(*candidate, obj);
    ++r.objective_evals;
    if (value > current_value + kImprovementEpsilon) {
      current = std::move(*candidate);
      current_value = value;
      r.rewirings.push_back(*action);
      stale = 0;
    } else {
      ++stale;
    }
    r.best_trace.push_back(current_value);
  }
  r.best_graph = std::move(current);
  finish(r, start);
  return r;
}

bool metropolis_accept(double delta, double temperature, std::mt19937_64& rng) {
  if (delta >= 0.0) return true;
  if (!(temperature > 0.0)) return false;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  return uni(rng) < std::exp(delta / temperature);
}

OptimizerReport simulated_annealing(const Graph& g, const SearchConfig& cfg,
                                    AnnealingSchedule schedule) {
  cfg.env.validate();
  if (!(schedule.decay > 0.0 && schedule.decay < 1.0)) {
    throw ParameterError("annealing decay must lie in (0, 1)");
  }
  const auto start = Clock::now();
  const ObjectiveConfig& obj = cfg.env.objective;
  OptimizerReport r = start_report("sa", g, combined_objective(g, obj));
  std::mt19937_64 rng(cfg.seed);

  double temperature = schedule.initial_temperature;
  if (temperature <= 0.0) temperature = std::max(0.01 * std::fabs(r.initial_objective), 1e-6);

  Graph current = g;
  double current_value = r.initial_objective;
  double best_value = current_value;
  std::vector<RewiringAction> path;
  long stale = 0;
  while (static_cast<int>(path.size()) < cfg.env.max_rewiring_budget &&
         stale < kEarlyStopWindow && r.objective_evals < cfg.max_evals) {
    const auto action = sample_feasible_rewiring(current, rng);
    if (!action) break;
    auto candidate = try_rewire(current, *action, cfg.env.forbid_disconnecting);
    if (!candidate) {
      ++stale;
      continue;
    }
    const double value = combined_objective(*candidate, obj);
    ++r.objective_evals;
    bool improved = false;
    if (metropolis_accept(value - current_value, temperature, rng)) {
      current = std::move(*candidate);
      current_value = value;
      path.push_back(*action);
      if (current_value > best_value + kImprovementEpsilon) {
        best_value = current_value;
        r.best_graph = current;
        r.rewirings = path;
        improved = true;
      }
    }
    stale = improved ? 0 : stale + 1;
    r.best_trace.push_back(best_value);
    temperature *= schedule.decay;
  }
  finish(r, start);
  return r;
}

std::optional<GreedyChoice> greedy_step(const Graph& g, const ObjectiveConfig& objective,
                                        double current_objective, bool forbid_disconnecting,
                                        long* evaluations) {
  const auto dir = g.directed_edges();
  GreedyChoice best;
  bool found = false;
  // (A,C,B,D), (C,A,D,B), (B,D,A,C) and (D,B,C,A) all produce the same graph;
  // only the representative led by the smallest node is evaluated, which is
  // also the lexicographically smallest of the four.
  for (const EdgeRef& e1 : dir) {
    for (const EdgeRef& e2 : dir) {
      const NodeId a = e1.tail;
      if (a > e1.head || a > e2.tail || a > e2.head) continue;
      const RewiringAction act = RewiringAction::swap(e1, e2);
      if (find_violation(g, act)) continue;
      const Graph next = apply_rewiring(g, act);
      if (forbid_disconnecting && !next.is_connected()) continue;
      const double value = combined_objective(next, objective);
      ++best.evaluations;
      // Values within round-off of the incumbent keep the earlier candidate.
      if (!found || value > best.objective + kImprovementEpsilon) {
        best.objective = value;
        best.action = act;
        found = true;
      }
    }
  }
  if (evaluations) *evaluations += best.evaluations;
  if (!found || !(best.objective > current_objective + kImprovementEpsilon)) return std::nullopt;
  return best;
}

OptimizerReport greedy(const Graph& g, const EnvConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  OptimizerReport r = start_report("greedy", g, combined_objective(g, cfg.objective));
  Graph current = g;
  double current_value = r.initial_objective;
  while (static_cast<int>(r.rewirings.size()) < cfg.max_rewiring_budget) {
    const auto choice = greedy_step(current, cfg.objective, current_value,
                                    cfg.forbid_disconnecting, &r.objective_evals);
    if (!choice) break;
    apply_rewiring_in_place(current, choice->action);
    current_value = choice->objective;
    r.rewirings.push_back(choice->action);
    r.best_trace.push_back(current_value);
  }
  r.best_graph = std::move(current);
  finish(r, start);
  return r;
}

namespace {

struct Individual {
  Graph graph;
  std::vector<RewiringAction> path;
  double fitness = 0.0;
};

}  // namespace

OptimizerReport evolutionary(const Graph& g, const SearchConfig& cfg, EvolutionConfig evo) {
  cfg.env.validate();
  if (evo.pop_size < 1) throw ParameterError("population size must be >= 1");
  if (evo.generations < 0) throw ParameterError("generation count must be >= 0");
  const auto start = Clock::now();
  const ObjectiveConfig& obj = cfg.env.objective;
  OptimizerReport r = start_report("ea", g, combined_objective(g, obj));
  std::mt19937_64 rng(cfg.seed);

  const std::size_t pop_size = static_cast<std::size_t>(evo.pop_size);
  std::vector<Individual> population(pop_size, Individual{g, {}, r.initial_objective});
  Individual best = population.front();
  std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);

  auto tournament = [&]() -> const Individual& {
    if (pop_size == 1) return population.front();
    const Individual& x = population[pick(rng)];
    const Individual& y = population[pick(rng)];
    return y.fitness > x.fitness ? y : x;
  };

  long stale = 0;
  bool stop = false;
  for (int gen = 0; gen < evo.generations && !stop; ++gen) {
    std::vector<Individual> children;
    children.reserve(pop_size);
    for (std::size_t c = 0; c < pop_size; ++c) {
      Individual child = tournament();
      if (!stop && static_cast<int>(child.path.size()) < cfg.env.max_rewiring_budget &&
          r.objective_evals < cfg.max_evals) {
        const auto action = sample_feasible_rewiring(child.graph, rng);
        auto mutated = action ? try_rewire(child.graph, *action, cfg.env.forbid_disconnecting)
                              : std::nullopt;
        if (mutated) {
          child.graph = std::move(*mutated);
          child.path.push_back(*action);
          child.fitness = combined_objective(child.graph, obj);
          ++r.objective_evals;
          if (child.fitness > best.fitness + kImprovementEpsilon) {
            best = child;
            stale = 0;
          } else {
            ++stale;
          }
          r.best_trace.push_back(best.fitness);
          if (stale >= kEarlyStopWindow || r.objective_evals >= cfg.max_evals) stop = true;
        }
      }
      children.push_back(std::move(child));
    }
    // Elitism of one: the best-so-far leads the next population.
    std::vector<Individual> next;
    next.reserve(pop_size);
    next.push_back(best);
    for (std::size_t c = 0; c + 1 < pop_size; ++c) next.push_back(std::move(children[c]));
    population = std::move(next);
  }
  r.best_graph = best.graph;
  r.rewirings = best.path;
  finish(r, start);
  return r;
}

}  // namespace rforge
