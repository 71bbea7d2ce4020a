// Acceptance checks. Prints one PASS/FAIL line per criterion; arguments select
// criteria by name (default: all except "learning").
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grad_check.hpp"
#include "greedy_oracle.hpp"
#include "rforge/baselines.hpp"
#include "rforge/error.hpp"
#include "rforge/firegnn.hpp"
#include "rforge/metrics.hpp"
#include "rforge/ppo.hpp"
#include "rforge/spectral.hpp"
#include "rforge/trainer.hpp"
#include "test_graphs.hpp"

using namespace rforge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure notes of a criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    std::ostringstream s;
    s << failures_ << " failure(s): " << notes_.str() << " | " << summary;
    return {false, s.str()};
  }

 private:
  int failures_ = 0;
  std::ostringstream notes_;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Eigen::VectorXd dense_spectrum(const Graph& g, bool laplacian) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (auto [u, v] : g.edges()) {
    m(u, v) = m(v, u) = laplacian ? -1.0 : 1.0;
    if (laplacian) {
      m(u, u) += 1.0;
      m(v, v) += 1.0;
    }
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

Outcome metric_oracle() {
  Checker c;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> size(2, 32);
  std::uniform_real_distribution<double> density(0.05, 0.6);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = size(rng);
    const Graph g = t % 2 ? testing::random_connected_graph(n, density(rng), rng)
                          : testing::random_graph(n, density(rng), rng);
    const auto adj = dense_spectrum(g, false);
    const auto lap = dense_spectrum(g, true);
    const double want_ac = g.is_connected() ? lap(1) : 0.0;
    const double e1 = std::fabs(spectral_radius(g) - adj(adj.size() - 1));
    const double e2 = std::fabs(algebraic_connectivity(g) - want_ac);
    worst = std::max({worst, e1, e2});
    c.expect(e1 <= 1e-6, "spectral radius off by " + fmt(e1));
    c.expect(e2 <= 1e-6, "algebraic connectivity off by " + fmt(e2));
  }
  for (std::size_t n : {5u, 10u, 20u}) {
    const double nd = static_cast<double>(n);
    c.expect(resilience_R(complete_graph(n), {}) == (nd - 1) / (2 * nd), "R(K_n) closed form");
    c.expect(resilience_R(star_graph(n), {}) == (nd - 1) / (nd * nd), "R(star_n) closed form");
  }
  return c.outcome("200 graphs, max spectral error " + fmt(worst) + ", R closed forms exact");
}

const std::set<std::string>& violation_names() {
  static const std::set<std::string> names{"terminate",  "e1-not-edge", "e2-not-edge",
                                           "nodes-not-distinct", "AB-exists", "CD-exists",
                                           "AD-exists",  "BC-exists",   "disconnects"};
  return names;
}

Outcome rewiring_conservation() {
  Checker c;
  std::mt19937_64 rng(202);
  long accepted = 0, rejected = 0;
  std::map<std::string, long> seen;
  for (int gi = 0; accepted < 100000; ++gi) {
    const std::size_t n = 15 + static_cast<std::size_t>(gi % 6) * 8;
    const std::size_t m = 1 + static_cast<std::size_t>(gi % 3);
    Graph g = ba_generate(n, m, 1000 + static_cast<std::uint64_t>(gi));
    const auto degrees = g.degree_sequence();
    const auto edges = g.num_edges();
    std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n) - 1);
    for (int i = 0; i < 1000; ++i) {
      const auto a = sample_feasible_rewiring(g, rng);
      if (!a) break;
      apply_rewiring_in_place(g, *a);
      ++accepted;

      // an arbitrary node quadruple, feasible or not
      const auto probe = RewiringAction::swap({node(rng), node(rng)}, {node(rng), node(rng)});
      const auto why = find_violation(g, probe);
      if (!why) continue;
      ++rejected;
      ++seen[*why];
      c.expect(violation_names().count(*why) == 1, "unnamed violation '" + *why + "'");
      try {
        apply_rewiring(g, probe);
        c.expect(false, "rejected action was applied");
      } catch (const FeasibilityError& e) {
        c.expect(e.constraint() == *why, "thrown constraint differs");
      }
    }
    c.expect(g.degree_sequence() == degrees, "degree sequence changed");
    c.expect(g.num_edges() == edges, "edge count changed");
  }
  std::ostringstream s;
  s << accepted << " accepted, " << rejected << " rejected (";
  bool first = true;
  for (const auto& [k, v] : seen) {
    s << (first ? "" : ", ") << k << " " << v;
    first = false;
  }
  s << ")";
  return c.outcome(s.str());
}

Outcome greedy_brute_force() {
  Checker c;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> size(6, 20);
  int steps = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = size(rng);
    const Graph g = testing::random_connected_graph(n, 2.5 / static_cast<double>(n), rng);
    EnvConfig env;
    env.max_rewiring_budget = 3;
    env.objective.alpha = (t % 3) * 0.5;
    const auto report = greedy(g, env);
    Graph state = g;
    for (const auto& a : report.rewirings) {
      const auto best = testing::brute_force_best(state, env.objective);
      c.expect(best && best->action == a, "graph " + std::to_string(t) + " step " + std::to_string(steps));
      apply_rewiring_in_place(state, a);
      ++steps;
    }
    // greedy stops only when the exhaustive best does not improve
    if (report.rewirings_used < env.max_rewiring_budget) {
      const auto best = testing::brute_force_best(state, env.objective);
      c.expect(!best || best->objective <= report.final_objective + kImprovementEpsilon,
               "greedy stopped early on graph " + std::to_string(t));
    }
  }
  return c.outcome("50 graphs, " + std::to_string(steps) + " greedy steps matched");
}

Outcome instance_accounting() {
  Checker c;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = ba_generate(15, 2, seed);
    c.expect(g.num_edges() == 27, "BA-15 edge count");
    c.expect(action_space_upper_bound(g) == 5832, "BA-15 action bound");
  }
  const Graph big = ba_generate(1000, 1, 0);
  c.expect(big.num_edges() == 999, "BA-1000 edge count");
  return c.outcome("BA-15: 27 edges, bound 5832; BA-1000 (m=1): " + std::to_string(big.num_edges()) + " edges");
}

void jitter(nn::ParameterSet& set, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (auto& p : set.entries()) {
    for (double& x : p.tensor.mutable_values()) x += u(rng);
  }
}

Outcome gradient_correctness() {
  Checker c;
  std::mt19937_64 rng(404);
  std::size_t probes = 0, relocated = 0, unresolved = 0;
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    PolicyConfig cfg;
    cfg.encoder.hidden = 12;
    cfg.encoder.order = 2 + t;
    ActorCritic model(cfg, 40 + static_cast<std::uint64_t>(t));
    jitter(model.policy_params(), rng);
    jitter(model.value_params(), rng);

    std::vector<Transition> stored;
    std::vector<double> adv, ret;
    const double offsets[] = {0.05, -0.5, 3.0, -0.05, 0.5, 2.5};
    const double advantages[] = {1.2, -0.8, -1.1, -0.4, 0.7, 0.9};
    for (int s = 0; s < 6; ++s) {
      const Graph g = ba_generate(9 + static_cast<std::size_t>(s), 2, static_cast<std::uint64_t>(7 * t + s));
      const Graph* one[] = {&g};
      PolicyDecision d;
      do {
        d = model.act(one, &rng).front();
      } while (d.action.terminate && s % 3 != 0);
      // stored log-prob below the current one gives ratio exp(offset)
      stored.push_back({g, d.action, d.forced, d.log_prob - offsets[s], d.value, 0.0, true});
      adv.push_back(advantages[s]);
      ret.push_back(d.value + 0.3 * (s - 2));
    }
    std::vector<const Transition*> batch;
    for (const auto& tr : stored) batch.push_back(&tr);
    PpoConfig ppo;

    std::vector<nn::Tensor> leaves;
    for (const auto& p : model.policy_params().entries()) leaves.push_back(p.tensor);
    for (const auto& p : model.value_params().entries()) leaves.push_back(p.tensor);
    const auto r = testing::grad_check(
        leaves, [&] { return ppo_loss(model, batch, adv, ret, ppo).total; }, 0, rng, 3);
    probes += r.probes;
    relocated += r.relocated;
    unresolved += r.unresolved;
    worst = std::max(worst, r.max_rel_error);
    std::vector<std::string> names;
    for (const auto& p : model.policy_params().entries()) names.push_back("policy/" + p.name);
    for (const auto& p : model.value_params().entries()) names.push_back("value/" + p.name);
    c.expect(r.max_rel_error <= 1e-4, "relative error " + fmt(r.max_rel_error) + " at " + names[r.worst_leaf] +
                                          "[" + std::to_string(r.worst_index) + "] analytic " +
                                          fmt(r.worst_analytic) + " numeric " + fmt(r.worst_numeric));
  }
  c.expect(probes >= 500, "only " + std::to_string(probes) + " probes");
  return c.outcome(std::to_string(probes) + " parameters probed (" + std::to_string(relocated) +
                   " moved off a kink, " + std::to_string(unresolved) + " compared across one), max relative error " +
                   fmt(worst));
}

// Non-isomorphism certificate: different adjacency spectra.
bool spectra_differ(const Graph& a, const Graph& b) {
  const auto x = dense_spectrum(a, false), y = dense_spectrum(b, false);
  return (x - y).cwiseAbs().maxCoeff() > 1e-8;
}

// Random d-regular graph by degree-preserving swaps from a circulant graph.
Graph random_regular(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Graph g(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = 1; k <= d / 2; ++k) {
      const auto u = static_cast<NodeId>((v + k) % n);
      if (!g.has_edge(static_cast<NodeId>(v), u)) g.add_edge(static_cast<NodeId>(v), u);
    }
  }
  if (d % 2 == 1) {
    for (std::size_t v = 0; v < n / 2; ++v) g.add_edge(static_cast<NodeId>(v), static_cast<NodeId>(v + n / 2));
  }
  for (int i = 0; i < 50; ++i) {
    if (const auto a = sample_feasible_rewiring(g, rng)) apply_rewiring_in_place(g, *a);
  }
  return g;
}

double gap(const BatchEmbeddings& a, const BatchEmbeddings& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.graph.size(); ++i) m = std::max(m, std::fabs(a.graph.values()[i] - b.graph.values()[i]));
  return m;
}

Outcome firegnn_reduction() {
  Checker c;
  std::mt19937_64 rng(505);
  nn::ParameterSet params;
  FireGnn k0({64, 5, 0}, params, "k0/", rng);
  for (int t = 0; t < 20; ++t) {
    const Graph g = testing::random_connected_graph(5 + static_cast<std::size_t>(t), 0.3, rng);
    const Graph* one[] = {&g};
    const auto a = k0.forward(one);
    const auto b = k0.forward_plain(one);
    auto same = [](const nn::Tensor& x, const nn::Tensor& y) {
      return x.shape() == y.shape() && std::equal(x.values().begin(), x.values().end(), y.values().begin());
    };
    c.expect(same(a.node, b.node) && same(a.edge, b.edge) && same(a.graph, b.graph),
             "K=0 differs from plain on graph " + std::to_string(t));
  }

  nn::ParameterSet fparams;
  FireGnn filtered({64, 5, 3}, fparams, "k3/", rng);
  std::string found;
  for (std::size_t n = 6; n <= 10 && found.empty(); ++n) {
    for (std::size_t d : {2u, 3u}) {
      if ((n * d) % 2 || !found.empty()) continue;
      std::vector<Graph> pool;
      for (int i = 0; i < 6; ++i) pool.push_back(random_regular(n, d, rng));
      pool.push_back(random_regular(n, d, rng));
      if (d == 2 && n % 3 == 0) {
        // disjoint triangles next to the cycle
        Graph tri(n);
        for (std::size_t b = 0; b < n; b += 3) {
          tri.add_edge(static_cast<NodeId>(b), static_cast<NodeId>(b + 1));
          tri.add_edge(static_cast<NodeId>(b + 1), static_cast<NodeId>(b + 2));
          tri.add_edge(static_cast<NodeId>(b), static_cast<NodeId>(b + 2));
        }
        pool.push_back(tri);
        pool.push_back(cycle_graph(n));
      }
      for (std::size_t i = 0; i < pool.size() && found.empty(); ++i) {
        for (std::size_t j = i + 1; j < pool.size() && found.empty(); ++j) {
          if (!spectra_differ(pool[i], pool[j])) continue;
          const double plain = gap(k0.forward_plain(std::vector<const Graph*>{&pool[i]}),
                                   k0.forward_plain(std::vector<const Graph*>{&pool[j]}));
          const double fire = gap(filtered.forward(pool[i]), filtered.forward(pool[j]));
          if (plain <= 1e-12 && fire > 1e-6) {
            found = std::to_string(n) + "-node " + std::to_string(d) + "-regular pair, plain gap " + fmt(plain) +
                    ", filtered gap " + fmt(fire);
          }
        }
      }
    }
  }
  c.expect(!found.empty(), "no separated regular pair found");
  return c.outcome("20 graphs bitwise equal; " + found);
}

// Probability that the policy performs the rewiring `target` (any of its four
// encodings) from g.
double rewiring_probability(const ActorCritic& model, const Graph& g, const RewiringAction& target) {
  const auto base = model.distributions(g, std::nullopt);
  const auto& dir = base.directed_edges;
  auto idx = [&](EdgeRef e) { return static_cast<std::size_t>(std::find(dir.begin(), dir.end(), e) - dir.begin()); };
  const EdgeRef ac = target.e1, bd = target.e2;
  double total = 0.0;
  for (const auto& [first, second] : {std::pair{ac, bd}, std::pair{ac.reversed(), bd.reversed()},
                                      std::pair{bd, ac}, std::pair{bd.reversed(), ac.reversed()}}) {
    if (!base.eligible[idx(first)]) continue;
    const double p_first = 0.5 * (base.first[idx(first)] + base.first[idx(first.reversed())]);
    total += p_first * model.distributions(g, first).second[idx(second)];
  }
  return (1.0 - base.terminate_prob) * total;
}

struct ToyInstance {
  Graph graph;
  RewiringAction best;
  double best_gain = 0.0;
  double runner_up = 0.0;
};

// Small connected graph whose best single rewiring is unique and clearly
// ahead of every other resulting graph.
ToyInstance find_toy(std::mt19937_64& rng, const ObjectiveConfig& obj) {
  for (;;) {
    const Graph g = testing::random_connected_graph(8, 0.25, rng);
    const double base = combined_objective(g, obj);
    std::vector<std::pair<double, RewiringAction>> outcomes;
    const auto dir = g.directed_edges();
    for (const EdgeRef& e1 : dir) {
      for (const EdgeRef& e2 : dir) {
        if (e1.tail > e1.head || e1.tail > e2.tail || e1.tail > e2.head) continue;
        const auto a = RewiringAction::swap(e1, e2);
        if (find_violation(g, a)) continue;
        outcomes.emplace_back(combined_objective(apply_rewiring(g, a), obj) - base, a);
      }
    }
    if (outcomes.size() < 4) continue;
    std::sort(outcomes.begin(), outcomes.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    const double best = outcomes[0].first, second = outcomes[1].first;
    if (best > 0.0 && second < 0.5 * best) return {g, outcomes[0].second, best, second};
  }
}

Outcome learning() {
  Checker c;
  std::ostringstream s;
  const auto start = std::chrono::steady_clock::now();

  // BA-15 at alpha = 0 with budget 20
  {
    const Graph g = ba_generate(15, 2, 0);
    TrainConfig cfg;
    cfg.env.objective.alpha = 0.0;
    cfg.env.max_rewiring_budget = 20;
    cfg.total_steps = 60000;
    cfg.eval_every = 2;
    cfg.seed = 1;
    ActorCritic model(PolicyConfig{}, 1);
    const Graph graphs[] = {g};
    const auto result = train(model, graphs, cfg);
    const auto policy = evaluate_policy(model, g, cfg.env);
    const auto base = greedy(g, cfg.env);
    c.expect(policy.gain_percent > 0.0, "policy gain not positive");
    c.expect(policy.gain_percent >= 0.5 * base.gain_percent, "policy below half the greedy gain");
    s << "BA-15: policy gain " << fmt(policy.gain_percent) << "% vs greedy " << fmt(base.gain_percent) << "% after "
      << result.env_steps << " steps, " << count_reversals(policy.rewirings) << " reversals";
  }

  // toy MDP: one step, a unique optimal rewiring on each of two graphs
  {
    std::mt19937_64 rng(606);
    EnvConfig env;
    env.max_rewiring_budget = 1;
    const ToyInstance a = find_toy(rng, env.objective);
    const ToyInstance b = find_toy(rng, env.objective);
    TrainConfig cfg;
    cfg.env = env;
    cfg.total_steps = 20000;
    cfg.eval_every = 1000000;
    cfg.seed = 2;
    PolicyConfig pc;
    ActorCritic model(pc, 2);
    const Graph graphs[] = {a.graph, b.graph};
    train(model, graphs, cfg);
    const double pa = rewiring_probability(model, a.graph, a.best);
    const double pb = rewiring_probability(model, b.graph, b.best);
    c.expect(pa >= 0.9 && pb >= 0.9, "toy optimal-action probability below 0.9");
    s << "; toy: P(optimal) " << fmt(pa) << ", " << fmt(pb);
  }
  s << "; " << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) << " s";
  return c.outcome(s.str());
}

std::size_t tail_after_last_improvement(const std::vector<double>& trace) {
  std::size_t last = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) last = i;
  }
  return trace.size() - 1 - last;
}

Outcome baseline_monotonicity() {
  Checker c;
  int runs = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Graph g = ba_generate(15 + 5 * seed, 2, seed);
    SearchConfig cfg;
    cfg.seed = seed;
    cfg.env.max_rewiring_budget = 1000000;
    cfg.env.objective.alpha = 0.5 * static_cast<double>(seed % 3);
    for (const auto& r : {hill_climb(g, cfg), simulated_annealing(g, cfg), evolutionary(g, cfg, {8, 1000000})}) {
      ++runs;
      bool monotone = true;
      for (std::size_t i = 1; i < r.best_trace.size(); ++i) monotone &= r.best_trace[i] >= r.best_trace[i - 1];
      c.expect(monotone, r.algorithm + " trace decreases");
      c.expect(tail_after_last_improvement(r.best_trace) == static_cast<std::size_t>(kEarlyStopWindow),
               r.algorithm + " stopped after " + std::to_string(tail_after_last_improvement(r.best_trace)));
    }
  }
  return c.outcome(std::to_string(runs) + " runs non-decreasing, each stopped after exactly " +
                   std::to_string(kEarlyStopWindow) + " stale evaluations");
}

Outcome telescoping() {
  Checker c;
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  std::uniform_int_distribution<int> budget(1, 20);
  double worst = 0.0;
  for (int e = 0; e < 100; ++e) {
    EnvConfig cfg;
    cfg.objective.alpha = alpha(rng);
    cfg.objective.resilience = static_cast<ResilienceKind>(e % 3);
    cfg.objective.utility = static_cast<UtilityKind>((e / 3) % 3);
    cfg.max_rewiring_budget = budget(rng);
    RewiringEnv env(cfg);
    env.reset(ba_generate(12 + static_cast<std::size_t>(e % 10), 2, static_cast<std::uint64_t>(e)));
    double total = 0.0;
    while (!env.done()) {
      const auto a = sample_feasible_rewiring(env.state(), rng);
      total += env.step(a ? *a : RewiringAction::stop()).reward / cfg.reward_scale;
    }
    const double err = std::fabs(total - (env.current_objective() - env.initial_objective()));
    worst = std::max(worst, err);
    c.expect(err <= 1e-12, "episode " + std::to_string(e) + " error " + fmt(err));
  }
  return c.outcome("100 episodes, max error " + fmt(worst));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric-oracle", metric_oracle},
      {"rewiring-conservation", rewiring_conservation},
      {"greedy-brute-force", greedy_brute_force},
      {"instance-accounting", instance_accounting},
      {"gradient-correctness", gradient_correctness},
      {"firegnn-reduction", firegnn_reduction},
      {"learning", learning},
      {"baseline-monotonicity", baseline_monotonicity},
      {"telescoping-reward", telescoping},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  for (const auto& s : selected) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == s; })) {
      std::cerr << "unknown criterion " << s << '\n';
      return 2;
    }
  }
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (selected.empty() ? name == "learning" : selected.count(name) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt(secs) << " s): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
