#include "rforge/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rforge/error.hpp"
#include "rforge/nn/ops.hpp"

namespace rforge {

using nn::Tensor;

namespace {

constexpr double kLog2 = 0.69314718055994530942;

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::size_t index_of(std::span<const EdgeRef> directed, EdgeRef e) {
  const auto it = std::lower_bound(directed.begin(), directed.end(), e);
  if (it == directed.end() || *it != e) {
    throw ContractError("edge " + std::to_string(e.tail) + "-" + std::to_string(e.head) +
                        " is not in the graph");
  }
  return static_cast<std::size_t>(it - directed.begin());
}

// Draws an index with probability exp(logp[i]) among entries with mask set.
std::size_t sample_from(std::span<const double> logp, const std::vector<bool>& mask,
                        std::size_t offset, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  std::size_t last = logp.size();
  for (std::size_t i = 0; i < logp.size(); ++i) {
    if (!mask[offset + i]) continue;
    acc += std::exp(logp[i]);
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t argmax_masked(std::span<const double> logp, const std::vector<bool>& mask,
                          std::size_t offset) {
  std::size_t best = logp.size();
  for (std::size_t i = 0; i < logp.size(); ++i) {
    if (mask[offset + i] && (best == logp.size() || logp[i] > logp[best])) best = i;
  }
  return best;
}

Tensor indicator(const std::vector<double>& v) { return Tensor::constant(v.size(), 1, v); }

}  // namespace

std::vector<bool> first_edge_mask(const Graph& g, std::span<const EdgeRef> directed) {
  std::vector<bool> mask(directed.size());
  for (std::size_t i = 0; i < directed.size(); ++i) mask[i] = has_feasible_partner(g, directed[i]);
  return mask;
}

Tensor ActorCritic::Mlp::operator()(const Tensor& x) const {
  return nn::add(nn::matmul(nn::selu(nn::add(nn::matmul(x, w1), b1)), w2), b2);
}

ActorCritic::Mlp ActorCritic::make_mlp(nn::ParameterSet& set, const std::string& name,
                                       std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const std::size_t d = cfg_.encoder.hidden;
  Mlp m;
  m.w1 = set.add_uniform(name + "/w1", in, d, in, rng);
  m.b1 = set.add_uniform(name + "/b1", 1, d, in, rng);
  m.w2 = set.add_uniform(name + "/w2", d, out, d, rng);
  m.b2 = set.add_uniform(name + "/b2", 1, out, d, rng);
  return m;
}

ActorCritic::Pointer ActorCritic::make_pointer(nn::ParameterSet& set, const std::string& name,
                                               std::mt19937_64& rng) {
  const std::size_t d = cfg_.encoder.hidden;
  Pointer p;
  p.query = set.add_uniform(name + "/query", d, d, d, rng);
  p.key = set.add_uniform(name + "/key", d, d, d, rng);
  p.v = set.add_uniform(name + "/v", d, 1, d, rng);
  return p;
}

ActorCritic::ActorCritic(const PolicyConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      init_rng_(seed),
      policy_encoder_(cfg.encoder, policy_params_, "encoder/", init_rng_),
      value_encoder_(cfg.encoder, value_params_, "encoder/", init_rng_) {
  const std::size_t d = cfg.encoder.hidden;
  terminate_head_ = make_mlp(policy_params_, "terminate", d, 1, init_rng_);
  first_head_ = make_mlp(policy_params_, "first", d + 2, d, init_rng_);
  second_head_ = make_mlp(policy_params_, "second", 2 * d + 2, d, init_rng_);
  first_pointer_ = make_pointer(policy_params_, "first_pointer", init_rng_);
  second_pointer_ = make_pointer(policy_params_, "second_pointer", init_rng_);
  value_head_ = make_mlp(value_params_, "value", d, 1, init_rng_);
}

Tensor ActorCritic::pointer_scores(const Pointer& p, const Tensor& queries, const Tensor& edges,
                                   std::span<const int> edge_owner) const {
  Tensor q = nn::gather_rows(nn::matmul(queries, p.query), edge_owner);
  return nn::matmul(nn::tanh(nn::add(q, nn::matmul(edges, p.key))), p.v);
}

ActorCritic::EdgeSelection ActorCritic::select_edges(const BatchEmbeddings& emb,
                                                     std::span<const std::size_t> samples) {
  EdgeSelection sel;
  sel.offsets.push_back(0);
  for (std::size_t c = 0; c < samples.size(); ++c) {
    const std::size_t b = samples[c];
    for (std::size_t r = emb.edge_offsets[b]; r < emb.edge_offsets[b + 1]; ++r) {
      sel.rows.push_back(static_cast<int>(r));
      sel.owner.push_back(static_cast<int>(c));
    }
    sel.offsets.push_back(sel.rows.size());
  }
  return sel;
}

namespace {
// One-hot "continue" code appended to head inputs.
Tensor continue_code(std::size_t rows) {
  std::vector<double> v(rows * 2, 0.0);
  for (std::size_t r = 0; r < rows; ++r) v[r * 2 + 1] = 1.0;
  return Tensor::constant(rows, 2, std::move(v));
}
}  // namespace

Tensor ActorCritic::first_log_probs(const Tensor& graph_rows, const Tensor& edge_rows,
                                    const EdgeSelection& sel, const std::vector<bool>& mask) const {
  const std::array<Tensor, 2> parts{graph_rows, continue_code(graph_rows.rows())};
  const Tensor query = first_head_(nn::concat_cols(parts));
  return nn::segment_log_softmax(pointer_scores(first_pointer_, query, edge_rows, sel.owner),
                                 sel.offsets, mask);
}

Tensor ActorCritic::second_log_probs(const Tensor& graph_rows, const Tensor& first_rows,
                                     const Tensor& edge_rows, const EdgeSelection& sel,
                                     const std::vector<bool>& mask) const {
  const std::array<Tensor, 3> parts{graph_rows, first_rows, continue_code(graph_rows.rows())};
  const Tensor query = second_head_(nn::concat_cols(parts));
  return nn::segment_log_softmax(pointer_scores(second_pointer_, query, edge_rows, sel.owner),
                                 sel.offsets, mask);
}

Tensor ActorCritic::values(std::span<const Graph* const> graphs) const {
  return value_head_(value_encoder_.forward(graphs).graph);
}

std::vector<PolicyDecision> ActorCritic::act(std::span<const Graph* const> graphs,
                                             std::mt19937_64* rng) const {
  nn::NoGradGuard no_grad;
  const BatchEmbeddings emb = policy_encoder_.forward(graphs);
  const Tensor value = values(graphs);
  const Tensor logits = terminate_head_(emb.graph);

  std::vector<PolicyDecision> out(graphs.size());
  std::vector<std::vector<EdgeRef>> directed(graphs.size());
  std::vector<std::size_t> cont;
  std::vector<bool> first_mask;
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    directed[b] = graphs[b]->directed_edges();
    const auto mask = first_edge_mask(*graphs[b], directed[b]);
    const double x = logits(b, 0);
    auto& d = out[b];
    d.value = value(b, 0);
    d.terminate_prob = 1.0 / (1.0 + std::exp(-x));
    d.forced = std::none_of(mask.begin(), mask.end(), [](bool m) { return m; });
    bool stop = d.forced;
    if (!stop) {
      stop = rng ? std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < d.terminate_prob
                 : d.terminate_prob > 0.5;
    }
    if (stop) {
      d.action = RewiringAction::stop();
      d.log_prob = log_sigmoid(x);
    } else {
      d.log_prob = log_sigmoid(-x);
      cont.push_back(b);
      first_mask.insert(first_mask.end(), mask.begin(), mask.end());
    }
  }
  if (cont.empty()) return out;

  const EdgeSelection sel = select_edges(emb, cont);
  const Tensor graph_rows = nn::gather_rows(emb.graph, std::vector<int>(cont.begin(), cont.end()));
  const Tensor edge_rows = nn::gather_rows(emb.edge, sel.rows);
  const Tensor logp1 = first_log_probs(graph_rows, edge_rows, sel, first_mask);

  std::vector<int> first_rows(cont.size());
  std::vector<EdgeRef> first_edge(cont.size());
  for (std::size_t c = 0; c < cont.size(); ++c) {
    const std::size_t b = cont[c];
    const std::size_t off = sel.offsets[c];
    const auto lp = logp1.values().subspan(off, sel.offsets[c + 1] - off);
    const auto& dir = directed[b];
    std::size_t pick;
    if (rng) {
      pick = sample_from(lp, first_mask, off, *rng);
      if (std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < 0.5) {
        pick = index_of(dir, dir[pick].reversed());
      }
    } else {
      // Best undirected pair by combined mass, then its likelier orientation.
      std::size_t best = lp.size();
      double best_mass = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < lp.size(); ++i) {
        if (!first_mask[off + i]) continue;
        const double mass = log_add_exp(lp[i], lp[index_of(dir, dir[i].reversed())]);
        if (mass > best_mass) {
          best_mass = mass;
          best = i;
        }
      }
      const std::size_t rev = index_of(dir, dir[best].reversed());
      pick = lp[rev] > lp[best] ? rev : best;
    }
    const std::size_t rev = index_of(dir, dir[pick].reversed());
    out[b].log_prob += log_add_exp(lp[pick], lp[rev]) - kLog2;
    first_edge[c] = dir[pick];
    first_rows[c] = static_cast<int>(emb.edge_offsets[b] + pick);
  }

  std::vector<bool> second_mask(sel.rows.size(), false);
  for (std::size_t c = 0; c < cont.size(); ++c) {
    const auto& dir = directed[cont[c]];
    for (const EdgeRef& e : feasible_partners(*graphs[cont[c]], first_edge[c])) {
      second_mask[sel.offsets[c] + index_of(dir, e)] = true;
    }
  }
  const Tensor logp2 = second_log_probs(graph_rows, nn::gather_rows(emb.edge, first_rows), edge_rows,
                                        sel, second_mask);
  for (std::size_t c = 0; c < cont.size(); ++c) {
    const std::size_t b = cont[c];
    const std::size_t off = sel.offsets[c];
    const auto lp = logp2.values().subspan(off, sel.offsets[c + 1] - off);
    const std::size_t pick = rng ? sample_from(lp, second_mask, off, *rng)
                                 : argmax_masked(lp, second_mask, off);
    out[b].log_prob += lp[pick];
    out[b].action = RewiringAction::swap(first_edge[c], directed[b][pick]);
  }
  return out;
}

HeadDistributions ActorCritic::distributions(const Graph& g, std::optional<EdgeRef> first_edge) const {
  nn::NoGradGuard no_grad;
  const Graph* one[] = {&g};
  const BatchEmbeddings emb = policy_encoder_.forward(one);
  HeadDistributions out;
  out.terminate_prob = 1.0 / (1.0 + std::exp(-terminate_head_(emb.graph).item()));
  out.directed_edges = g.directed_edges();
  out.eligible = first_edge_mask(g, out.directed_edges);
  const std::size_t n = out.directed_edges.size();
  out.first.assign(n, 0.0);
  out.second.assign(n, 0.0);
  if (std::none_of(out.eligible.begin(), out.eligible.end(), [](bool m) { return m; })) return out;

  const std::size_t samples[] = {0};
  const EdgeSelection sel = select_edges(emb, samples);
  const Tensor edge_rows = nn::gather_rows(emb.edge, sel.rows);
  const Tensor logp1 = first_log_probs(emb.graph, edge_rows, sel, out.eligible);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.eligible[i]) out.first[i] = std::exp(logp1.values()[i]);
  }
  if (first_edge) {
    const int row = static_cast<int>(index_of(out.directed_edges, *first_edge));
    std::vector<bool> mask(n, false);
    for (const EdgeRef& e : feasible_partners(g, *first_edge)) mask[index_of(out.directed_edges, e)] = true;
    const int rows[] = {row};
    const Tensor logp2 = second_log_probs(emb.graph, nn::gather_rows(emb.edge, rows), edge_rows, sel, mask);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) out.second[i] = std::exp(logp2.values()[i]);
    }
  }
  return out;
}

ActionEvaluation ActorCritic::evaluate(std::span<const Graph* const> graphs,
                                       std::span<const RewiringAction> actions,
                                       std::span<const char> forced) const {
  const std::size_t batch = graphs.size();
  if (actions.size() != batch || forced.size() != batch) {
    throw ContractError("evaluate: graphs, actions and flags differ in count");
  }
  const BatchEmbeddings emb = policy_encoder_.forward(graphs);
  const Tensor logits = terminate_head_(emb.graph);

  std::vector<double> stopped(batch), voluntary(batch);
  std::vector<std::size_t> cont;
  std::vector<std::vector<EdgeRef>> directed(batch);
  std::vector<bool> first_mask;
  for (std::size_t b = 0; b < batch; ++b) {
    if (forced[b] && !actions[b].terminate) throw ContractError("a forced decision must be a stop");
    stopped[b] = actions[b].terminate ? 1.0 : 0.0;
    voluntary[b] = forced[b] ? 0.0 : 1.0;
    if (!actions[b].terminate) {
      cont.push_back(b);
      directed[b] = graphs[b]->directed_edges();
      const auto mask = first_edge_mask(*graphs[b], directed[b]);
      first_mask.insert(first_mask.end(), mask.begin(), mask.end());
    }
  }

  // log sigmoid(x) = -log(1 + exp(-x)).
  const Tensor zeros = Tensor::zeros(batch, 1);
  const Tensor log_stop = nn::scale(nn::log_add_exp(zeros, nn::scale(logits, -1.0)), -1.0);
  const Tensor log_go = nn::scale(nn::log_add_exp(zeros, logits), -1.0);
  const Tensor stop_ind = indicator(stopped);
  const Tensor go_ind = nn::add_scalar(nn::scale(stop_ind, -1.0), 1.0);
  Tensor log_prob = nn::add(nn::mul(stop_ind, log_stop), nn::mul(go_ind, log_go));
  const Tensor p_stop = nn::sigmoid(logits);
  const Tensor p_go = nn::add_scalar(nn::scale(p_stop, -1.0), 1.0);
  Tensor entropy = nn::mul(indicator(voluntary),
                           nn::scale(nn::add(nn::mul(p_stop, log_stop), nn::mul(p_go, log_go)), -1.0));
  if (cont.empty()) return {log_prob, entropy, values(graphs)};

  const EdgeSelection sel = select_edges(emb, cont);
  const Tensor graph_rows = nn::gather_rows(emb.graph, std::vector<int>(cont.begin(), cont.end()));
  const Tensor edge_rows = nn::gather_rows(emb.edge, sel.rows);
  const Tensor logp1 = first_log_probs(graph_rows, edge_rows, sel, first_mask);

  std::vector<int> chosen, chosen_rev, first_rows, second_chosen;
  std::vector<bool> second_mask(sel.rows.size(), false);
  for (std::size_t c = 0; c < cont.size(); ++c) {
    const std::size_t b = cont[c];
    const auto& dir = directed[b];
    const std::size_t i1 = index_of(dir, actions[b].e1);
    if (!first_mask[sel.offsets[c] + i1]) throw ContractError("stored first edge has no partner");
    chosen.push_back(static_cast<int>(sel.offsets[c] + i1));
    chosen_rev.push_back(static_cast<int>(sel.offsets[c] + index_of(dir, actions[b].e1.reversed())));
    first_rows.push_back(static_cast<int>(emb.edge_offsets[b] + i1));
    for (const EdgeRef& e : feasible_partners(*graphs[b], actions[b].e1)) {
      second_mask[sel.offsets[c] + index_of(dir, e)] = true;
    }
    const std::size_t i2 = sel.offsets[c] + index_of(dir, actions[b].e2);
    if (!second_mask[i2]) throw ContractError("stored second edge is not a feasible partner");
    second_chosen.push_back(static_cast<int>(i2));
  }
  const Tensor logp2 = second_log_probs(graph_rows, nn::gather_rows(emb.edge, first_rows), edge_rows,
                                        sel, second_mask);
  const Tensor part1 = nn::add_scalar(
      nn::log_add_exp(nn::gather_rows(logp1, chosen), nn::gather_rows(logp1, chosen_rev)), -kLog2);
  const Tensor edge_lp = nn::add(part1, nn::gather_rows(logp2, second_chosen));
  // Masked log-probs are 0, so p * log p vanishes there.
  const Tensor h1 = nn::segment_sum(nn::mul(nn::exp(logp1), logp1), sel.offsets);
  const Tensor h2 = nn::segment_sum(nn::mul(nn::exp(logp2), logp2), sel.offsets);
  const Tensor edge_ent = nn::scale(nn::add(h1, h2), -1.0);

  std::vector<int> back(batch, -1);
  for (std::size_t c = 0; c < cont.size(); ++c) back[cont[c]] = static_cast<int>(c);
  log_prob = nn::add(log_prob, nn::gather_rows(edge_lp, back));
  entropy = nn::add(entropy, nn::gather_rows(edge_ent, back));
  return {log_prob, entropy, values(graphs)};
}

}  // namespace rforge
