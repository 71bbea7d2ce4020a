#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "rforge/error.hpp"
#include "rforge/graph.hpp"
#include "test_graphs.hpp"

using namespace rforge;

TEST_CASE("BA edge counts") {
  CHECK(ba_generate(15, 2, 1).num_edges() == 27);
  CHECK(ba_generate(15, 2, 99).num_edges() == 27);
  CHECK(ba_generate(1000, 1, 7).num_edges() == 999);
  // complete seed graph on m+1 nodes plus m edges per later node
  for (std::size_t m = 1; m <= 4; ++m) {
    const Graph g = ba_generate(40, m, m);
    CHECK(g.num_edges() == m * (m + 1) / 2 + (40 - m - 1) * m);
    CHECK(g.is_connected());
  }
}

TEST_CASE("BA is reproducible per seed") {
  CHECK(ba_generate(50, 2, 3) == ba_generate(50, 2, 3));
  CHECK_FALSE(ba_generate(50, 2, 3) == ba_generate(50, 2, 4));
}

TEST_CASE("BA parameter errors") {
  CHECK_THROWS_AS(ba_generate(10, 0, 0), ParameterError);
  CHECK_THROWS_AS(ba_generate(2, 2, 0), ParameterError);
}

TEST_CASE("BA degrees follow preferential attachment") {
  // Over many seeds, node 0 (in the seed clique) should collect far more
  // edges than the last node, which always has degree m at birth.
  double first = 0, last = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Graph g = ba_generate(200, 2, s);
    first += static_cast<double>(g.degree(0));
    last += static_cast<double>(g.degree(199));
  }
  CHECK(last == doctest::Approx(100.0));
  CHECK(first > 5 * last);
}

TEST_CASE("basic mutation and queries") {
  Graph g(4);
  g.add_edge(0, 1);
  g.add_edge(2, 1);
  CHECK(g.has_edge(1, 0));
  CHECK(g.num_edges() == 2);
  CHECK_THROWS_AS(g.add_edge(1, 1), ContractError);
  CHECK_THROWS_AS(g.add_edge(0, 1), ContractError);
  CHECK_THROWS_AS(g.add_edge(0, 9), ContractError);
  g.remove_node(1);
  CHECK(g.num_edges() == 0);
  CHECK(g.num_nodes() == 4);
  CHECK_THROWS_AS(g.remove_edge(0, 1), ContractError);
}

TEST_CASE("directed edges come in both orientations, sorted") {
  const Graph g = path_graph(3);
  const auto d = g.directed_edges();
  REQUIRE(d.size() == 4);
  CHECK(d[0] == EdgeRef{0, 1});
  CHECK(d[1] == EdgeRef{1, 0});
  CHECK(d[2] == EdgeRef{1, 2});
  CHECK(d[3] == EdgeRef{2, 1});
}

TEST_CASE("permutation and induced subgraph") {
  std::mt19937_64 rng(5);
  const Graph g = testing::random_connected_graph(12, 0.3, rng);
  const auto perm = testing::random_permutation(12, rng);
  const Graph h = g.permuted(perm);
  CHECK(h.num_edges() == g.num_edges());
  for (auto [u, v] : g.edges()) CHECK(h.has_edge(perm[u], perm[v]));

  const std::vector<NodeId> keep{3, 7, 1};
  const Graph s = g.induced_subgraph(keep);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      if (i != j) CHECK(s.has_edge(static_cast<NodeId>(i), static_cast<NodeId>(j)) == g.has_edge(keep[i], keep[j]));
    }
  }
}

TEST_CASE("connectivity") {
  CHECK(path_graph(5).is_connected());
  Graph g = cycle_graph(6);
  g.remove_edge(0, 1);
  CHECK(g.is_connected());
  g.remove_edge(3, 4);
  CHECK_FALSE(g.is_connected());
}

TEST_CASE("edge list round trip") {
  const Graph g = ba_generate(30, 2, 11);
  const std::string text = format_edge_list(g);
  const Graph back = parse_edge_list(text);
  // ids are compacted in first-appearance order of the written list
  std::map<NodeId, NodeId> relabel;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    NodeId u, v;
    fields >> u >> v;
    relabel.try_emplace(u, static_cast<NodeId>(relabel.size()));
    relabel.try_emplace(v, static_cast<NodeId>(relabel.size()));
  }
  CHECK(back.num_nodes() == g.num_nodes());
  CHECK(back.num_edges() == g.num_edges());
  for (auto [u, v] : g.edges()) CHECK(back.has_edge(relabel.at(u), relabel.at(v)));

  // a graph already labelled in appearance order comes back unchanged
  CHECK(parse_edge_list(format_edge_list(complete_graph(6))) == complete_graph(6));
  CHECK(parse_edge_list(format_edge_list(path_graph(7))) == path_graph(7));

  const auto path = std::filesystem::temp_directory_path() / "rforge_roundtrip.edgelist";
  save_edge_list(g, path);
  CHECK(load_edge_list(path) == back);
  std::filesystem::remove(path);
}

TEST_CASE("edge list compaction and comments") {
  const Graph g = parse_edge_list("# header\n10 20\n\n20 30 # trailing comment\n");
  CHECK(g.num_nodes() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
}

TEST_CASE("edge list errors carry the line number") {
  auto line_of = [](const std::string& text) {
    try {
      parse_edge_list(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("0 1\n1 x\n") == 2);
  CHECK(line_of("0 1\n2 2\n") == 2);
  CHECK(line_of("0 1\n1 0\n") == 2);
  CHECK(line_of("0 1\n1 2\n-1 3\n") == 3);
  CHECK(line_of("0 1 2\n") == 1);
  CHECK(line_of("5\n") == 1);
}

TEST_CASE("random walk sampling") {
  const Graph g = ba_generate(300, 2, 1);
  const Graph s = random_walk_sample(g, 40, 9);
  CHECK(s.num_nodes() == 40);
  CHECK(s.is_connected());
  CHECK(random_walk_sample(g, 40, 9) == s);
  CHECK_THROWS_AS(random_walk_sample(g, 301, 0), ParameterError);

  // a component smaller than the target can never be covered
  Graph split(10);
  split.add_edge(0, 1);
  split.add_edge(2, 3);
  CHECK_THROWS_AS(random_walk_sample(split, 5, 0), SamplingError);
}

TEST_CASE("largest component") {
  const Graph g = star_graph(6);
  const NodeId hub[] = {0};
  CHECK(largest_cc_fraction(g, hub) == doctest::Approx(1.0 / 6.0));
  CHECK(largest_cc_fraction(g, {}) == 1.0);
  std::vector<bool> alive(6, true);
  alive[0] = false;
  CHECK(largest_cc_size(g, alive) == 1);
}

namespace {
// Betweenness by counting shortest paths through each node for every pair.
std::vector<double> betweenness_oracle(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const auto dist = testing::hop_distances(g);
  // sigma[s][t]: number of shortest s-t paths
  std::vector<std::vector<double>> sigma(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return dist[s][a] < dist[s][b]; });
    sigma[s][s] = 1;
    for (NodeId v : order) {
      if (dist[s][v] == std::numeric_limits<int>::max() || static_cast<std::size_t>(v) == s) continue;
      for (NodeId u : g.neighbors(v)) {
        if (dist[s][u] + 1 == dist[s][v]) sigma[s][v] += sigma[s][u];
      }
    }
  }
  std::vector<double> bc(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = s + 1; t < n; ++t) {
      if (dist[s][t] == std::numeric_limits<int>::max()) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t) continue;
        if (dist[s][v] == std::numeric_limits<int>::max() || dist[v][t] == std::numeric_limits<int>::max()) continue;
        if (dist[s][v] + dist[v][t] == dist[s][t]) bc[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
      }
    }
  }
  return bc;
}
}  // namespace

TEST_CASE("betweenness matches path-counting oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = testing::random_graph(4 + trial % 12, 0.3, rng);
    const auto got = betweenness(g);
    const auto want = betweenness_oracle(g);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) CHECK(got[v] == doctest::Approx(want[v]).epsilon(1e-12));
  }
  // star: the hub sits on every leaf pair
  CHECK(betweenness(star_graph(6))[0] == doctest::Approx(10.0));
}
