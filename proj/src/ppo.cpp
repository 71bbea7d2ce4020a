#include "rforge/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rforge/error.hpp"
#include "rforge/nn/ops.hpp"

namespace rforge {

using nn::Tensor;

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ParameterError("clip_eps must lie in (0, 1)");
  if (!(dual_clip > 1.0)) throw ParameterError("dual_clip must exceed 1");
  if (batch <= 0 || minibatch <= 0 || epochs <= 0) {
    throw ParameterError("batch, minibatch and epochs must be positive");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0) || !(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ParameterError("gamma and lambda must lie in [0, 1]");
  }
  if (!(lr > 0.0)) throw ParameterError("learning rate must be positive");
}

AdvantageEstimate gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                 std::span<const char> done, double bootstrap, double gamma,
                                 double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || done.size() != n) throw ContractError("GAE inputs differ in length");
  AdvantageEstimate out;
  out.advantage.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap;
    const double live = done[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    running = delta + gamma * lambda * live * running;
    out.advantage[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double& a : adv) {
    a -= mean;
    var += a * a;
  }
  const double sd = std::sqrt(var / n);
  if (sd < 1e-12) {
    std::fill(adv.begin(), adv.end(), 0.0);
    return;
  }
  for (double& a : adv) a /= sd;
  // Second pass removes the rounding left in the mean.
  const double residual = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  for (double& a : adv) a -= residual;
}

Tensor dual_clip_objective(const Tensor& ratio, std::span<const double> advantages, double clip_eps,
                           double dual_clip) {
  if (ratio.cols() != 1 || ratio.rows() != advantages.size()) {
    throw ShapeError("ratio column does not match advantage count");
  }
  const std::size_t n = advantages.size();
  const Tensor adv = Tensor::constant(n, 1, std::vector<double>(advantages.begin(), advantages.end()));
  const Tensor unclipped = nn::mul(ratio, adv);
  const Tensor clipped = nn::mul(nn::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv);
  const Tensor surrogate = nn::minimum(unclipped, clipped);
  std::vector<double> floor(n);
  for (std::size_t i = 0; i < n; ++i) {
    floor[i] = advantages[i] < 0.0 ? dual_clip * advantages[i] : -std::numeric_limits<double>::infinity();
  }
  return nn::maximum(surrogate, Tensor::constant(n, 1, std::move(floor)));
}

PpoLoss ppo_loss(const ActorCritic& model, std::span<const Transition* const> batch,
                 std::span<const double> advantages, std::span<const double> returns,
                 const PpoConfig& cfg) {
  const std::size_t n = batch.size();
  if (n == 0 || advantages.size() != n || returns.size() != n) {
    throw ContractError("ppo_loss needs matching, non-empty inputs");
  }
  std::vector<const Graph*> graphs;
  std::vector<RewiringAction> actions;
  std::vector<char> forced;
  std::vector<double> old_log_prob;
  for (const Transition* t : batch) {
    graphs.push_back(&t->state);
    actions.push_back(t->action);
    forced.push_back(t->forced ? 1 : 0);
    old_log_prob.push_back(t->log_prob);
  }
  const ActionEvaluation eval = model.evaluate(graphs, actions, forced);
  const Tensor ratio = nn::exp(nn::sub(eval.log_prob, Tensor::constant(n, 1, std::move(old_log_prob))));
  PpoLoss loss;
  loss.policy = nn::scale(nn::mean(dual_clip_objective(ratio, advantages, cfg.clip_eps, cfg.dual_clip)), -1.0);
  const Tensor err = nn::sub(eval.value, Tensor::constant(n, 1, std::vector<double>(returns.begin(), returns.end())));
  loss.value = nn::mean(nn::mul(err, err));
  loss.entropy = nn::mean(eval.entropy);
  loss.total = nn::add(nn::add(loss.policy, nn::scale(loss.value, cfg.value_coef)),
                       nn::scale(loss.entropy, -cfg.entropy_coef));
  return loss;
}

UpdateStats ppo_update(ActorCritic& model, std::span<const Transition> batch,
                       const AdvantageEstimate& estimate, const PpoConfig& cfg,
                       PpoOptimizers& optimizers, std::mt19937_64& rng) {
  cfg.validate();
  if (batch.empty()) throw ContractError("ppo_update on an empty batch");
  std::vector<double> adv = estimate.advantage;
  normalize_advantages(adv);

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  UpdateStats stats;
  long minibatches = 0;
  const auto mb = static_cast<std::size_t>(cfg.minibatch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      std::vector<const Transition*> part;
      std::vector<double> part_adv, part_ret;
      for (std::size_t i = start; i < end; ++i) {
        part.push_back(&batch[order[i]]);
        part_adv.push_back(adv[order[i]]);
        part_ret.push_back(estimate.returns[order[i]]);
      }
      model.policy_params().zero_grad();
      model.value_params().zero_grad();
      const PpoLoss loss = ppo_loss(model, part, part_adv, part_ret, cfg);
      if (!std::isfinite(loss.total.item())) {
        std::ostringstream msg;
        msg << "non-finite loss (policy " << loss.policy.item() << ", value " << loss.value.item()
            << ", entropy " << loss.entropy.item() << ") at epoch " << epoch << ", minibatch starting "
            << start;
        throw TrainingError(msg.str());
      }
      nn::backward(loss.total);
      if (cfg.max_grad_norm > 0.0) {
        model.policy_params().clip_grad_norm(cfg.max_grad_norm);
        model.value_params().clip_grad_norm(cfg.max_grad_norm);
      }
      optimizers.policy.lr = cfg.lr;
      optimizers.value.lr = cfg.lr;
      nn::adam_step(model.policy_params(), optimizers.policy);
      nn::adam_step(model.value_params(), optimizers.value);
      stats.policy_loss += loss.policy.item();
      stats.value_loss += loss.value.item();
      stats.entropy += loss.entropy.item();
      ++minibatches;
    }
  }
  stats.policy_loss /= static_cast<double>(minibatches);
  stats.value_loss /= static_cast<double>(minibatches);
  stats.entropy /= static_cast<double>(minibatches);
  return stats;
}

}  // namespace rforge
