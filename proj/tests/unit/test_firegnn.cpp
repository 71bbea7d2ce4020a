#include <doctest.h>

#include <cmath>
#include <map>

#include "rforge/error.hpp"
#include "rforge/firegnn.hpp"
#include "test_graphs.hpp"

using namespace rforge;

namespace {

struct Encoder {
  nn::ParameterSet params;
  std::mt19937_64 rng;
  FireGnn gnn;

  explicit Encoder(int order, std::size_t hidden = 16, std::uint64_t seed = 1)
      : rng(seed), gnn({hidden, 5, order}, params, "enc/", rng) {}
};

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::vector<double> row(const nn::Tensor& t, std::size_t r) {
  return {t.values().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
          t.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols())};
}

// True when every step of the filtration has a single max-degree node, so
// that its removal order does not depend on node ids.
bool tie_free_filtration(const Graph& g, int order) {
  Graph work = g;
  std::vector<bool> alive(g.num_nodes(), true);
  for (int j = 0; j < order; ++j) {
    std::size_t best = 0, count = 0;
    NodeId pick = -1;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      if (!alive[v]) continue;
      const std::size_t d = work.degree(static_cast<NodeId>(v));
      if (pick < 0 || d > best) {
        best = d;
        pick = static_cast<NodeId>(v);
        count = 1;
      } else if (d == best) {
        ++count;
      }
    }
    if (count > 1) return false;
    alive[pick] = false;
    work.remove_node(pick);
  }
  return true;
}

}  // namespace

TEST_CASE("star filtration removes the hub first") {
  const auto f = build_filtration(star_graph(5), 1);
  REQUIRE(f.levels.size() == 2);
  CHECK(f.removal_order == std::vector<NodeId>{0});
  CHECK(f.levels.back() == star_graph(5));
  CHECK(f.levels.front().num_edges() == 0);
  CHECK(f.node_count(0) == 4);
  CHECK(f.node_count(1) == 5);
}

TEST_CASE("order zero keeps only the input") {
  const Graph g = path_graph(4);
  const auto f = build_filtration(g, 0);
  REQUIRE(f.levels.size() == 1);
  CHECK(f.levels[0] == g);
}

TEST_CASE("complete graph filtration breaks ties by id") {
  const auto f = build_filtration(complete_graph(4), 3);
  CHECK(f.removal_order == std::vector<NodeId>{0, 1, 2});
  CHECK(f.node_count(3) == 4);
  CHECK(f.node_count(2) == 3);
  CHECK(f.node_count(1) == 2);
  CHECK(f.node_count(0) == 1);
}

TEST_CASE("filtration levels are nested") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Graph g = testing::random_connected_graph(10 + t % 6, 0.3, rng);
    const int order = static_cast<int>(g.num_nodes()) - 1;
    const auto f = build_filtration(g, order);
    CHECK(f.levels.size() == static_cast<std::size_t>(order + 1));
    for (std::size_t l = 1; l < f.levels.size(); ++l) {
      CHECK(f.levels[l - 1].num_edges() <= f.levels[l].num_edges());
      CHECK(f.node_count(l - 1) + 1 == f.node_count(l));
      for (auto [u, v] : f.levels[l - 1].edges()) CHECK(f.levels[l].has_edge(u, v));
    }
    CHECK(f.levels.front().num_edges() == 0);
  }
}

TEST_CASE("filtration order out of range") {
  CHECK_THROWS_AS(build_filtration(path_graph(4), 4), ParameterError);
  CHECK_THROWS_AS(build_filtration(path_graph(4), -1), ParameterError);
}

TEST_CASE("node features") {
  for (std::size_t p = 0; p < 200; ++p) {
    for (double x : sinusoidal_encoding(p)) CHECK(std::fabs(x) <= 1.0);
  }
  const Graph g = star_graph(4);
  const auto f = node_features(g, std::vector<bool>(4, true));
  CHECK(f[0] == 1.0);
  CHECK(f[kNodeFeatureDims] == doctest::Approx(1.0 / 3.0));
  // the hub has rank 0, every leaf rank 1
  const auto r0 = sinusoidal_encoding(0), r1 = sinusoidal_encoding(1);
  for (std::size_t i = 0; i < kPositionalDims; ++i) {
    CHECK(f[1 + i] == r0[i]);
    CHECK(f[2 * kNodeFeatureDims + 1 + i] == r1[i]);
  }
}

TEST_CASE("order zero equals the plain path bit for bit") {
  Encoder enc(0, 64);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Graph g = testing::random_connected_graph(6 + t, 0.3, rng);
    const Graph* one[] = {&g};
    const auto a = enc.gnn.forward(one);
    const auto b = enc.gnn.forward_plain(one);
    CHECK(std::equal(a.node.values().begin(), a.node.values().end(), b.node.values().begin()));
    CHECK(std::equal(a.edge.values().begin(), a.edge.values().end(), b.edge.values().begin()));
    CHECK(std::equal(a.graph.values().begin(), a.graph.values().end(), b.graph.values().begin()));
  }
}

TEST_CASE("embedding shapes and attention weights") {
  Encoder enc(3);
  const Graph g = ba_generate(12, 2, 1);
  const auto e = enc.gnn.forward(g);
  CHECK(e.node.shape() == std::array<std::size_t, 2>{12, 16});
  CHECK(e.edge.shape() == std::array<std::size_t, 2>{2 * g.num_edges(), 16});
  CHECK(e.graph.shape() == std::array<std::size_t, 2>{1, 16});
  for (const nn::Tensor* w : {&e.node_attention, &e.edge_attention, &e.graph_attention}) {
    CHECK(w->cols() == 4);
    for (std::size_t r = 0; r < w->rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < w->cols(); ++c) total += (*w)(r, c);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  // the first-removed node only lives on the top level
  const NodeId first = build_filtration(g, 3).removal_order[0];
  CHECK(e.node_attention(first, 3) == 1.0);
  for (double x : e.node.values()) CHECK(std::isfinite(x));
}

TEST_CASE("edge embeddings depend on orientation") {
  Encoder enc(2);
  const Graph g = path_graph(5);
  const auto e = enc.gnn.forward(g);
  const auto dir = g.directed_edges();
  for (std::size_t i = 0; i < dir.size(); i += 2) {
    REQUIRE(dir[i + 1] == EdgeRef{dir[i].head, dir[i].tail});
    CHECK(max_abs_diff(row(e.edge, i), row(e.edge, i + 1)) > 1e-8);
  }
}

TEST_CASE("symmetric nodes get equal embeddings") {
  Encoder enc(0);
  const auto e = enc.gnn.forward(complete_graph(4));
  for (std::size_t v = 1; v < 4; ++v) CHECK(max_abs_diff(row(e.node, 0), row(e.node, v)) <= 1e-12);
}

TEST_CASE("single edge readout uses its two endpoints") {
  Encoder enc(0);
  Graph g(5);
  g.add_edge(1, 3);
  const auto e = enc.gnn.forward(g);
  for (std::size_t c = 0; c < e.graph.cols(); ++c) {
    CHECK(e.graph(0, c) == doctest::Approx(0.5 * (e.node(1, c) + e.node(3, c))).epsilon(1e-14));
  }
  for (double x : e.node.values()) CHECK(std::isfinite(x));

  Encoder deep(4);
  const auto f = deep.gnn.forward(g);
  CHECK(f.graph_attention(0, 4) == 1.0);
}

TEST_CASE("edgeless input is rejected") {
  Encoder enc(2);
  CHECK_THROWS_AS(enc.gnn.forward(Graph(4)), ContractError);
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(17);
  for (int order : {0, 3}) {
    Encoder enc(order);
    int tested = 0;
    for (int t = 0; t < 200 && tested < 6; ++t) {
      const Graph g = testing::random_connected_graph(9, 0.35, rng);
      if (order > 0 && !tie_free_filtration(g, order)) continue;
      ++tested;
      const auto perm = testing::random_permutation(9, rng);
      const Graph h = g.permuted(perm);
      const auto a = enc.gnn.forward(g);
      const auto b = enc.gnn.forward(h);
      CHECK(max_abs_diff(a.graph.values(), b.graph.values()) <= 1e-10);
      for (std::size_t v = 0; v < 9; ++v) {
        CHECK(max_abs_diff(row(a.node, v), row(b.node, static_cast<std::size_t>(perm[v]))) <= 1e-10);
      }
      const auto dg = g.directed_edges();
      const auto dh = h.directed_edges();
      std::map<std::pair<NodeId, NodeId>, std::size_t> index;
      for (std::size_t i = 0; i < dh.size(); ++i) index[{dh[i].tail, dh[i].head}] = i;
      for (std::size_t i = 0; i < dg.size(); ++i) {
        const std::size_t j = index.at({perm[dg[i].tail], perm[dg[i].head]});
        CHECK(max_abs_diff(row(a.edge, i), row(b.edge, j)) <= 1e-10);
      }
    }
    CHECK(tested == 6);
  }
}

TEST_CASE("filtration separates regular graphs the plain path cannot") {
  Graph two_triangles(6);
  for (NodeId base : {0, 3}) {
    two_triangles.add_edge(base, base + 1);
    two_triangles.add_edge(base + 1, base + 2);
    two_triangles.add_edge(base, base + 2);
  }
  const Graph hexagon = cycle_graph(6);
  Encoder plain(0);
  Encoder filtered(2);
  const double plain_gap =
      max_abs_diff(plain.gnn.forward(hexagon).graph.values(), plain.gnn.forward(two_triangles).graph.values());
  const double filtered_gap = max_abs_diff(filtered.gnn.forward(hexagon).graph.values(),
                                           filtered.gnn.forward(two_triangles).graph.values());
  CHECK(plain_gap <= 1e-12);
  CHECK(filtered_gap > 1e-6);
}

TEST_CASE("batched forward matches single forward") {
  Encoder enc(3);
  const Graph a = ba_generate(10, 2, 1);
  const Graph b = path_graph(4);  // effective order 3
  const Graph c = star_graph(3);  // effective order 2
  const Graph* batch[] = {&a, &b, &c};
  const auto all = enc.gnn.forward(batch);
  std::size_t b_index = 0;
  for (const Graph* g : batch) {
    const auto one = enc.gnn.forward(*g);
    CHECK(max_abs_diff(row(all.graph, b_index), one.graph.values()) <= 1e-12);
    for (std::size_t v = 0; v < g->num_nodes(); ++v) {
      CHECK(max_abs_diff(row(all.node, all.node_offsets[b_index] + v), row(one.node, v)) <= 1e-12);
    }
    ++b_index;
  }
}
