#include "rforge/firegnn.hpp"

#include <algorithm>
#include <cmath>

#include "rforge/error.hpp"

namespace rforge {

using nn::Tensor;

std::size_t FiltratedGraph::node_count(std::size_t level) const {
  return static_cast<std::size_t>(std::count(present[level].begin(), present[level].end(), true));
}

FiltratedGraph build_filtration(const Graph& g, int order) {
  const auto n = static_cast<int>(g.num_nodes());
  if (order < 0 || order > n - 1) {
    throw ParameterError("filtration order " + std::to_string(order) + " outside [0, " +
                         std::to_string(n - 1) + "]");
  }
  FiltratedGraph f;
  f.order = order;
  std::vector<Graph> top_down{g};
  std::vector<std::vector<bool>> present_top_down{std::vector<bool>(g.num_nodes(), true)};
  for (int j = 0; j < order; ++j) {
    Graph next = top_down.back();
    std::vector<bool> alive = present_top_down.back();
    NodeId pick = -1;
    for (NodeId v = 0; v < n; ++v) {
      if (alive[v] && (pick < 0 || next.degree(v) > next.degree(pick))) pick = v;
    }
    next.remove_node(pick);
    alive[pick] = false;
    f.removal_order.push_back(pick);
    top_down.push_back(std::move(next));
    present_top_down.push_back(std::move(alive));
  }
  for (int j = order; j >= 0; --j) {
    f.levels.push_back(std::move(top_down[j]));
    f.present.push_back(std::move(present_top_down[j]));
  }
  for (std::size_t l = 0; l < f.levels.size(); ++l) {
    std::vector<bool> active(g.num_nodes());
    for (NodeId v = 0; v < n; ++v) active[v] = f.present[l][v] && f.levels[l].degree(v) > 0;
    f.non_isolated.push_back(std::move(active));
  }
  return f;
}

std::array<double, kPositionalDims> sinusoidal_encoding(std::size_t position) {
  std::array<double, kPositionalDims> out{};
  const double pos = static_cast<double>(position);
  for (std::size_t i = 0; i < kPositionalDims / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / kPositionalDims);
    out[2 * i] = std::sin(pos * freq);
    out[2 * i + 1] = std::cos(pos * freq);
  }
  return out;
}

std::vector<double> node_features(const Graph& level, const std::vector<bool>& present) {
  const std::size_t n = level.num_nodes();
  std::vector<double> out(n * kNodeFeatureDims, 0.0);
  std::size_t max_degree = 0;
  std::vector<std::size_t> degrees;
  for (std::size_t v = 0; v < n; ++v) {
    if (!present[v]) continue;
    max_degree = std::max(max_degree, level.degree(static_cast<NodeId>(v)));
    degrees.push_back(level.degree(static_cast<NodeId>(v)));
  }
  std::sort(degrees.begin(), degrees.end(), std::greater<>());
  for (std::size_t v = 0; v < n; ++v) {
    if (!present[v]) continue;
    const std::size_t d = level.degree(static_cast<NodeId>(v));
    double* row = out.data() + v * kNodeFeatureDims;
    row[0] = max_degree == 0 ? 0.0 : static_cast<double>(d) / static_cast<double>(max_degree);
    // Nodes ahead in descending-degree order; equal degrees share a rank.
    const auto rank = static_cast<std::size_t>(
        std::lower_bound(degrees.begin(), degrees.end(), d, std::greater<>()) - degrees.begin());
    const auto pe = sinusoidal_encoding(rank);
    std::copy(pe.begin(), pe.end(), row + 1);
  }
  return out;
}

LevelBatch make_level_batch(std::span<const Graph* const> levels,
                            std::span<const std::vector<bool>* const> present) {
  if (levels.size() != present.size()) throw ContractError("level and mask counts differ");
  LevelBatch batch;
  auto pattern = std::make_shared<nn::SparsePattern>();
  pattern->offsets.push_back(0);
  std::vector<double> feats;
  batch.segment_offsets.push_back(0);
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const Graph& g = *levels[s];
    const auto& mask = *present[s];
    if (mask.size() != g.num_nodes()) throw ShapeError("presence mask does not match graph size");
    std::vector<int> row_of(g.num_nodes(), -1);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      if (mask[v]) {
        row_of[v] = static_cast<int>(batch.row_node.size());
        batch.row_node.push_back(static_cast<NodeId>(v));
        batch.row_segment.push_back(s);
      }
    }
    const auto level_feats = node_features(g, mask);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      if (!mask[v]) continue;
      for (NodeId u : g.neighbors(static_cast<NodeId>(v))) {
        if (row_of[u] < 0) throw ContractError("edge to a node absent from its level");
        pattern->columns.push_back(row_of[u]);
      }
      pattern->offsets.push_back(pattern->columns.size());
      feats.insert(feats.end(), level_feats.begin() + v * kNodeFeatureDims,
                   level_feats.begin() + (v + 1) * kNodeFeatureDims);
    }
    batch.segment_offsets.push_back(batch.row_node.size());
  }
  batch.adjacency = std::move(pattern);
  batch.features = Tensor::constant(batch.row_node.size(), kNodeFeatureDims, std::move(feats));
  return batch;
}

FireGnn::FireGnn(const FireGnnConfig& cfg, nn::ParameterSet& params, const std::string& prefix,
                 std::mt19937_64& rng)
    : cfg_(cfg) {
  if (cfg.hidden == 0 || cfg.layers < 1 || cfg.order < 0) {
    throw ParameterError("encoder needs hidden > 0, layers >= 1, order >= 0");
  }
  const std::size_t d = cfg.hidden;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + "gin" + std::to_string(l) + "/";
    const std::size_t in = l == 0 ? kNodeFeatureDims : d;
    Layer layer;
    layer.eps = params.add_filled(p + "eps", 1, 1, 0.0);
    layer.w1 = params.add_uniform(p + "w1", in, d, in, rng);
    layer.b1 = params.add_uniform(p + "b1", 1, d, in, rng);
    layer.w2 = params.add_uniform(p + "w2", d, d, d, rng);
    layer.b2 = params.add_uniform(p + "b2", 1, d, d, rng);
    layer.gain = params.add_filled(p + "norm_gain", 1, d, 1.0);
    layer.bias = params.add_filled(p + "norm_bias", 1, d, 0.0);
    layer.shift = params.add_filled(p + "norm_shift", 1, d, 1.0);
    layers_.push_back(layer);
  }
  const std::size_t jk_in = d * static_cast<std::size_t>(cfg.layers);
  jk_w_ = params.add_uniform(prefix + "jk/w", jk_in, d, jk_in, rng);
  jk_b_ = params.add_uniform(prefix + "jk/b", 1, d, jk_in, rng);
  edge_w1_ = params.add_uniform(prefix + "edge/w1", 2 * d, d, 2 * d, rng);
  edge_b1_ = params.add_uniform(prefix + "edge/b1", 1, d, 2 * d, rng);
  edge_w2_ = params.add_uniform(prefix + "edge/w2", d, d, d, rng);
  edge_b2_ = params.add_uniform(prefix + "edge/b2", 1, d, d, rng);
  node_score_ = params.add_uniform(prefix + "attention/node", d, 1, d, rng);
  edge_score_ = params.add_uniform(prefix + "attention/edge", d, 1, d, rng);
  graph_score_ = params.add_uniform(prefix + "attention/graph", d, 1, d, rng);
  isolated_w_ = params.add_uniform(prefix + "isolated/w", kNodeFeatureDims, d, kNodeFeatureDims, rng);
  isolated_b_ = params.add_uniform(prefix + "isolated/b", 1, d, kNodeFeatureDims, rng);
}

int FireGnn::effective_order(const Graph& g) const {
  return std::min(cfg_.order, static_cast<int>(g.num_nodes()) - 1);
}

Tensor FireGnn::gin_forward(const LevelBatch& batch) const {
  Tensor h = batch.features;
  std::vector<Tensor> outputs;
  for (const Layer& layer : layers_) {
    Tensor z = nn::add(nn::add(h, nn::mul(h, layer.eps)), nn::sparse_sum(batch.adjacency, h));
    Tensor hidden = nn::selu(nn::add(nn::matmul(z, layer.w1), layer.b1));
    Tensor m = nn::add(nn::matmul(hidden, layer.w2), layer.b2);
    h = nn::selu(nn::graph_norm(m, batch.segment_offsets, layer.gain, layer.bias, layer.shift));
    outputs.push_back(h);
  }
  return nn::add(nn::matmul(nn::concat_cols(outputs), jk_w_), jk_b_);
}

Tensor FireGnn::edge_mlp(const Tensor& tails, const Tensor& heads) const {
  const std::array<Tensor, 2> parts{nn::add(tails, heads), nn::sub(tails, heads)};
  Tensor hidden = nn::selu(nn::add(nn::matmul(nn::concat_cols(parts), edge_w1_), edge_b1_));
  return nn::add(nn::matmul(hidden, edge_w2_), edge_b2_);
}

namespace {

struct Attended {
  Tensor out;
  Tensor weights;
};

// slots[l][t] indexes the item row for target t at level slot l, or -1.
// Each target mixes its valid slots with softmax(score . item) weights.
Attended attend(const Tensor& items, const Tensor& score, const std::vector<std::vector<int>>& slots) {
  const std::size_t targets = slots.front().size();
  const std::size_t count = slots.size();
  const Tensor s = nn::matmul(items, score);
  std::vector<Tensor> columns;
  std::vector<bool> mask(targets * count);
  for (std::size_t l = 0; l < count; ++l) {
    columns.push_back(nn::gather_rows(s, slots[l]));
    for (std::size_t t = 0; t < targets; ++t) mask[t * count + l] = slots[l][t] >= 0;
  }
  Attended a;
  a.weights = nn::masked_softmax_rows(nn::concat_cols(columns), mask);
  for (std::size_t l = 0; l < count; ++l) {
    Tensor term = nn::scale_rows(nn::gather_rows(items, slots[l]), nn::column(a.weights, l));
    a.out = l == 0 ? term : nn::add(a.out, term);
  }
  return a;
}

Tensor ones_column(std::size_t n) { return Tensor::constant(n, 1, std::vector<double>(n, 1.0)); }

}  // namespace

BatchEmbeddings FireGnn::forward(std::span<const Graph* const> graphs) const {
  return encode(graphs, true);
}

BatchEmbeddings FireGnn::forward(const Graph& g) const {
  const Graph* one[] = {&g};
  return encode(one, true);
}

BatchEmbeddings FireGnn::forward_plain(std::span<const Graph* const> graphs) const {
  return encode(graphs, false);
}

BatchEmbeddings FireGnn::encode(std::span<const Graph* const> graphs, bool use_filtration) const {
  if (graphs.empty()) throw ContractError("encoder called on an empty batch");
  std::vector<FiltratedGraph> filtrations;
  filtrations.reserve(graphs.size());
  for (const Graph* g : graphs) {
    if (g->num_edges() == 0) throw ContractError("cannot embed an edgeless graph");
    if (use_filtration) {
      filtrations.push_back(build_filtration(*g, effective_order(*g)));
    } else {
      FiltratedGraph f;
      f.levels.push_back(*g);
      f.present.emplace_back(g->num_nodes(), true);
      std::vector<bool> active(g->num_nodes());
      for (std::size_t v = 0; v < g->num_nodes(); ++v) active[v] = g->degree(static_cast<NodeId>(v)) > 0;
      f.non_isolated.push_back(std::move(active));
      filtrations.push_back(std::move(f));
    }
  }

  std::vector<const Graph*> level_ptrs;
  std::vector<const std::vector<bool>*> mask_ptrs;
  std::vector<std::size_t> first_segment;
  std::size_t max_levels = 0;
  for (const auto& f : filtrations) {
    first_segment.push_back(level_ptrs.size());
    max_levels = std::max(max_levels, f.levels.size());
    for (std::size_t l = 0; l < f.levels.size(); ++l) {
      level_ptrs.push_back(&f.levels[l]);
      mask_ptrs.push_back(&f.present[l]);
    }
  }
  const LevelBatch batch = make_level_batch(level_ptrs, mask_ptrs);
  const Tensor h = gin_forward(batch);

  // Row of node v in segment s, or -1.
  auto row_of = [&](std::size_t segment, NodeId v) -> int {
    const auto begin = batch.row_node.begin() + static_cast<std::ptrdiff_t>(batch.segment_offsets[segment]);
    const auto end = batch.row_node.begin() + static_cast<std::ptrdiff_t>(batch.segment_offsets[segment + 1]);
    const auto it = std::lower_bound(begin, end, v);
    if (it == end || *it != v) return -1;
    return static_cast<int>(it - batch.row_node.begin());
  };

  BatchEmbeddings out;
  out.node_offsets.push_back(0);
  out.edge_offsets.push_back(0);
  std::size_t node_targets = 0, edge_targets = 0;
  for (const Graph* g : graphs) {
    node_targets += g->num_nodes();
    edge_targets += 2 * g->num_edges();
    out.node_offsets.push_back(node_targets);
    out.edge_offsets.push_back(edge_targets);
  }
  const std::size_t slot_count = use_filtration ? max_levels : 1;

  // Nodes.
  std::vector<std::vector<int>> node_slots(slot_count, std::vector<int>(node_targets, -1));
  std::vector<int> isolated_rows(node_targets, -1);
  bool any_isolated = false;
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const auto& f = filtrations[b];
    const std::size_t top = f.levels.size() - 1;
    for (std::size_t v = 0; v < graphs[b]->num_nodes(); ++v) {
      const std::size_t t = out.node_offsets[b] + v;
      for (std::size_t l = 0; l < f.levels.size(); ++l) {
        if (f.non_isolated[l][v]) node_slots[l][t] = row_of(first_segment[b] + l, static_cast<NodeId>(v));
      }
      if (!f.non_isolated[top][v]) {
        isolated_rows[t] = row_of(first_segment[b] + top, static_cast<NodeId>(v));
        any_isolated = true;
      }
    }
  }
  if (use_filtration) {
    Attended a = attend(h, node_score_, node_slots);
    out.node = a.out;
    out.node_attention = a.weights;
  } else {
    out.node = nn::gather_rows(h, node_slots[0]);
    out.node_attention = ones_column(node_targets);
  }
  if (any_isolated) {
    std::vector<double> indicator(node_targets);
    for (std::size_t t = 0; t < node_targets; ++t) indicator[t] = isolated_rows[t] >= 0 ? 1.0 : 0.0;
    Tensor raw = nn::gather_rows(batch.features, isolated_rows);
    Tensor proj = nn::add(nn::matmul(raw, isolated_w_), isolated_b_);
    out.node = nn::add(out.node, nn::scale_rows(proj, Tensor::constant(node_targets, 1, std::move(indicator))));
  }

  // Directed edges: one embedding per (level, edge) with both endpoints present.
  std::vector<int> tails, heads;
  std::vector<std::vector<int>> edge_slots(slot_count, std::vector<int>(edge_targets, -1));
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const auto& f = filtrations[b];
    const auto directed = graphs[b]->directed_edges();
    for (std::size_t l = 0; l < f.levels.size(); ++l) {
      for (std::size_t e = 0; e < directed.size(); ++e) {
        const auto [u, v] = directed[e];
        if (!f.present[l][u] || !f.present[l][v]) continue;
        edge_slots[l][out.edge_offsets[b] + e] = static_cast<int>(tails.size());
        tails.push_back(row_of(first_segment[b] + l, u));
        heads.push_back(row_of(first_segment[b] + l, v));
      }
    }
  }
  const Tensor per_level_edges = edge_mlp(nn::gather_rows(h, tails), nn::gather_rows(h, heads));
  if (use_filtration) {
    Attended a = attend(per_level_edges, edge_score_, edge_slots);
    out.edge = a.out;
    out.edge_attention = a.weights;
  } else {
    out.edge = per_level_edges;
    out.edge_attention = ones_column(edge_targets);
  }

  // Graph readout per level: mean over non-isolated nodes.
  std::vector<std::vector<int>> groups(level_ptrs.size());
  std::vector<std::vector<int>> graph_slots(slot_count, std::vector<int>(graphs.size(), -1));
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const auto& f = filtrations[b];
    for (std::size_t l = 0; l < f.levels.size(); ++l) {
      const std::size_t s = first_segment[b] + l;
      for (std::size_t v = 0; v < graphs[b]->num_nodes(); ++v) {
        if (f.non_isolated[l][v]) groups[s].push_back(row_of(s, static_cast<NodeId>(v)));
      }
      if (f.levels[l].num_edges() > 0) graph_slots[l][b] = static_cast<int>(s);
    }
  }
  const Tensor readouts = nn::pool_mean(h, groups);
  if (use_filtration) {
    Attended a = attend(readouts, graph_score_, graph_slots);
    out.graph = a.out;
    out.graph_attention = a.weights;
  } else {
    out.graph = readouts;
    out.graph_attention = ones_column(graphs.size());
  }
  return out;
}

}  // namespace rforge
