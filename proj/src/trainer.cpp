#include "rforge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rforge/error.hpp"
#include "rforge/nn/adam.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace rforge {

namespace {

double mean_greedy_gain(const ActorCritic& model, std::span<const Graph> graphs, const EnvConfig& env) {
  double total = 0.0;
  for (const Graph& g : graphs) total += evaluate_policy(model, g, env).gain_percent;
  return total / static_cast<double>(graphs.size());
}

// Tape buffers run to megabytes and live for one update; keep them in the
// heap instead of mapping and unmapping pages on every allocation.
void keep_tape_memory() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)once;
#endif
}

}  // namespace

TrainResult train(ActorCritic& model, std::span<const Graph> graphs, const TrainConfig& cfg,
                  const TrainCallback& on_update) {
  cfg.env.validate();
  cfg.ppo.validate();
  if (graphs.empty()) throw ParameterError("training needs at least one graph");
  keep_tape_memory();
  if (cfg.num_envs <= 0 || cfg.total_steps <= 0 || cfg.eval_every <= 0) {
    throw ParameterError("num_envs, total_steps and eval_every must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  const int envs = cfg.num_envs;
  const int horizon = std::max(1, cfg.ppo.batch / envs);
  const long steps_per_update = static_cast<long>(horizon) * envs;
  const long updates = std::max(1L, cfg.total_steps / steps_per_update);

  std::vector<RewiringEnv> pool;
  std::size_t next_graph = 0;
  for (int e = 0; e < envs; ++e) {
    pool.emplace_back(cfg.env);
    pool.back().reset(graphs[next_graph++ % graphs.size()]);
  }

  PpoOptimizers optimizers;
  TrainResult result;
  result.best_eval_gain = mean_greedy_gain(model, graphs, cfg.env);
  auto best_policy = model.policy_params().snapshot();
  auto best_value = model.value_params().snapshot();

  for (long update = 0; update < updates; ++update) {
    std::vector<std::vector<Transition>> streams(envs);
    std::vector<double> finished_gains;
    for (int t = 0; t < horizon; ++t) {
      std::vector<const Graph*> states;
      for (auto& env : pool) states.push_back(&env.state());
      const auto decisions = model.act(states, &rng);
      for (int e = 0; e < envs; ++e) {
        Transition tr;
        tr.state = pool[e].state();
        tr.action = decisions[e].action;
        tr.forced = decisions[e].forced;
        tr.log_prob = decisions[e].log_prob;
        tr.value = decisions[e].value;
        const StepResult step = pool[e].step(tr.action);
        tr.reward = step.reward;
        tr.done = step.done;
        streams[e].push_back(std::move(tr));
        if (step.done) {
          finished_gains.push_back(gain_percent(pool[e].initial_objective(), pool[e].current_objective()));
          pool[e].reset(graphs[next_graph++ % graphs.size()]);
        }
      }
      result.env_steps += envs;
    }

    std::vector<double> bootstrap(envs, 0.0);
    {
      nn::NoGradGuard no_grad;
      std::vector<const Graph*> states;
      for (auto& env : pool) states.push_back(&env.state());
      const nn::Tensor v = model.values(states);
      for (int e = 0; e < envs; ++e) bootstrap[e] = v(e, 0);
    }
    std::vector<Transition> batch;
    AdvantageEstimate estimate;
    for (int e = 0; e < envs; ++e) {
      std::vector<double> rewards, values;
      std::vector<char> done;
      for (const auto& tr : streams[e]) {
        rewards.push_back(tr.reward);
        values.push_back(tr.value);
        done.push_back(tr.done ? 1 : 0);
      }
      const auto est = gae_advantages(rewards, values, done, bootstrap[e], cfg.ppo.gamma, cfg.ppo.gae_lambda);
      estimate.advantage.insert(estimate.advantage.end(), est.advantage.begin(), est.advantage.end());
      estimate.returns.insert(estimate.returns.end(), est.returns.begin(), est.returns.end());
      for (auto& tr : streams[e]) batch.push_back(std::move(tr));
    }

    PpoConfig ppo = cfg.ppo;
    ppo.lr = nn::linear_decay_lr(cfg.ppo.lr, update, updates);
    const UpdateStats stats = ppo_update(model, batch, estimate, ppo, optimizers, rng);

    TrainLogRow row;
    row.update = static_cast<int>(update + 1);
    row.env_steps = result.env_steps;
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    if (!finished_gains.empty()) {
      double sum = 0.0;
      for (double g : finished_gains) sum += g;
      row.mean_gain = sum / static_cast<double>(finished_gains.size());
    } else if (!result.log.empty()) {
      row.mean_gain = result.log.back().mean_gain;
    }
    row.eval_gain = result.log.empty() ? result.best_eval_gain : result.log.back().eval_gain;
    if ((update + 1) % cfg.eval_every == 0 || update + 1 == updates) {
      row.eval_gain = mean_greedy_gain(model, graphs, cfg.env);
      // Ties go to the later, longer-trained weights.
      if (row.eval_gain >= result.best_eval_gain) {
        result.best_eval_gain = row.eval_gain;
        result.best_update = row.update;
        best_policy = model.policy_params().snapshot();
        best_value = model.value_params().snapshot();
      }
    }
    result.log.push_back(row);
    if (on_update) on_update(row);
  }
  model.policy_params().restore(best_policy);
  model.value_params().restore(best_value);
  return result;
}

OptimizerReport evaluate_policy(const ActorCritic& model, const Graph& g, const EnvConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RewiringEnv env(cfg);
  env.reset(g);
  OptimizerReport report;
  report.algorithm = "policy";
  report.initial_objective = env.initial_objective();
  report.best_trace.push_back(env.initial_objective());
  report.objective_evals = 1;
  while (!env.done()) {
    const Graph* state[] = {&env.state()};
    const RewiringAction a = model.act(state, nullptr).front().action;
    env.step(a);
    if (a.terminate) break;
    report.rewirings.push_back(a);
    ++report.objective_evals;
    report.best_trace.push_back(std::max(report.best_trace.back(), env.current_objective()));
  }
  report.best_graph = env.state();
  report.final_objective = env.current_objective();
  report.rewirings_used = static_cast<int>(report.rewirings.size());
  report.gain_percent = gain_percent(report.initial_objective, report.final_objective);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

int count_reversals(std::span<const RewiringAction> actions) {
  int count = 0;
  for (std::size_t i = 1; i < actions.size(); ++i) {
    if (!actions[i].terminate && !actions[i - 1].terminate && actions[i] == actions[i - 1].inverse()) {
      ++count;
    }
  }
  return count;
}

std::string format_training_log(std::span<const TrainLogRow> log) {
  std::ostringstream out;
  out.precision(10);
  out << "update,mean_gain,policy_loss,value_loss,entropy\n";
  for (const auto& r : log) {
    out << r.update << ',' << r.mean_gain << ',' << r.policy_loss << ',' << r.value_loss << ','
        << r.entropy << '\n';
  }
  return out.str();
}

}  // namespace rforge
