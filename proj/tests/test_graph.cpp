#include "ctqw/graph.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "ctqw/error.hpp"

using namespace ctqw;

namespace {

std::map<std::size_t, std::size_t> degree_histogram(const Graph& g) {
  std::map<std::size_t, std::size_t> h;
  for (std::size_t i = 0; i < g.size(); ++i) ++h[g.degree(i)];
  return h;
}

// Straight simulation of the T-fractal growth rule on a plain edge list:
// every edge a-b becomes a-m, m-b plus a fresh branch m-y.
struct TCounter {
  std::size_t nodes = 2;
  std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}};
};

TCounter grow_t(int generations) {
  TCounter t;
  for (int g = 0; g < generations; ++g) {
    std::vector<std::pair<std::size_t, std::size_t>> next;
    for (auto [a, b] : t.edges) {
      const std::size_t m = t.nodes++, y = t.nodes++;
      next.push_back({a, m});
      next.push_back({m, b});
      next.push_back({m, y});
    }
    t.edges = next;
  }
  return t;
}

std::map<std::size_t, std::size_t> histogram_of(const TCounter& t) {
  std::vector<std::size_t> deg(t.nodes, 0);
  for (auto [a, b] : t.edges) {
    ++deg[a];
    ++deg[b];
  }
  std::map<std::size_t, std::size_t> h;
  for (auto d : deg) ++h[d];
  return h;
}

void check_laplacian_basics(const Graph& g) {
  const Eigen::MatrixXd l = g.laplacian();
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
  CHECK((l - l.transpose()).cwiseAbs().maxCoeff() == 0.0);
  std::size_t deg_sum = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    deg_sum += g.degree(i);
    for (std::size_t j : g.neighbors(i)) {
      CHECK(j != i);
      const auto back = g.neighbors(j);
      CHECK(std::find(back.begin(), back.end(), i) != back.end());
    }
  }
  CHECK(deg_sum == 2 * g.edge_count());
  CHECK(g.connected());
}

}  // namespace

TEST_CASE("node counts follow the family formulas") {
  for (int g = 1; g <= 8; ++g) {
    std::size_t p3 = 1;
    for (int i = 0; i < g; ++i) p3 *= 3;
    CHECK(build(GraphSpec::dsg(g)).size() == p3);
    CHECK(GraphSpec::dsg(g).node_count() == p3);
    CHECK(build(GraphSpec::tfractal(g)).size() == p3 + 1);
  }
  for (int g = 1; g <= 12; ++g) {
    const std::size_t n = 3 * (std::size_t{1} << g) - 2;
    CHECK(build(GraphSpec::cayley_tree(g)).size() == n);
    CHECK(GraphSpec::cayley_tree(g).node_count() == n);
  }
  CHECK(build(GraphSpec::torus(5, 3)).size() == 125);
  CHECK(build(GraphSpec::complete(7)).size() == 7);
}

TEST_CASE("dsg generation 4 has three corners") {
  const Graph g = build(GraphSpec::dsg(4));
  CHECK(g.size() == 81);
  const auto h = degree_histogram(g);
  CHECK(h.size() == 2);
  CHECK(h.at(2) == 3);
  CHECK(h.at(3) == 78);
}

TEST_CASE("dsg trace identity") {
  for (int g = 1; g <= 6; ++g) {
    const Graph graph = build(GraphSpec::dsg(g));
    CHECK(graph.laplacian().trace() == doctest::Approx(3.0 * graph.size() - 3.0));
  }
}

TEST_CASE("t-fractal matches an independent growth counter") {
  for (int g = 1; g <= 5; ++g) {
    const TCounter ref = grow_t(g);
    const Graph built = build(GraphSpec::tfractal(g));
    CHECK(built.size() == ref.nodes);
    CHECK(built.edge_count() == ref.edges.size());
    CHECK(degree_histogram(built) == histogram_of(ref));
  }
  const auto h3 = histogram_of(grow_t(3));
  CHECK(h3.at(1) == 15);
  CHECK(h3.at(3) == 13);
}

TEST_CASE("t-fractal is numbered from its centre") {
  for (int g = 2; g <= 6; ++g) {
    const Graph t = build(GraphSpec::tfractal(g));
    CHECK(t.degree(0) == 3);
    const auto dist = t.distances_from(0);
    CHECK(*std::max_element(dist.begin(), dist.end()) == (std::size_t{1} << (g - 1)));
    CHECK(std::is_sorted(dist.begin(), dist.end()));
  }
}

TEST_CASE("trees have N-1 edges") {
  for (int g = 1; g <= 7; ++g) {
    const Graph t = build(GraphSpec::tfractal(g));
    CHECK(t.edge_count() == t.size() - 1);
    const Graph c = build(GraphSpec::cayley_tree(g));
    CHECK(c.edge_count() == c.size() - 1);
    CHECK(degree_histogram(c).at(1) == c.size() / 2 + 1);
  }
  const Graph ct5 = build(GraphSpec::cayley_tree(5));
  CHECK(ct5.size() == 94);
  CHECK(ct5.degree(0) == 3);
}

TEST_CASE("complete graph on two nodes") {
  const Graph g = build(GraphSpec::complete(2));
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  Eigen::Matrix2d expected;
  expected << 1, -1, -1, 1;
  CHECK(g.laplacian() == expected);
}

TEST_CASE("laplacian invariants over every family") {
  const std::vector<GraphSpec> specs{
      GraphSpec::complete(9),      GraphSpec::chain(7),        GraphSpec::chain(7, false),
      GraphSpec::torus(4, 2),      GraphSpec::torus(3, 3),     GraphSpec::torus(2, 3),
      GraphSpec::dsg(3),           GraphSpec::tfractal(3),     GraphSpec::cayley_tree(4),
      GraphSpec::product(GraphSpec::dsg(2), GraphSpec::chain(4)),
  };
  for (const auto& s : specs) {
    CAPTURE(s.label());
    check_laplacian_basics(build(s));
  }
}

TEST_CASE("periodic lattice degrees") {
  const Graph t = build(GraphSpec::torus(5, 3));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.degree(i) == 6);
  const Graph ring = build(GraphSpec::chain(2));
  CHECK(ring.edge_count() == 1);
}

TEST_CASE("cartesian products") {
  SUBCASE("K2 x K2 is a 4-cycle") {
    const Graph g = cartesian_product(build(GraphSpec::complete(2)), build(GraphSpec::complete(2)));
    CHECK(g.size() == 4);
    CHECK(g.edge_count() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(g.degree(i) == 2);
  }
  SUBCASE("open 3-chain squared is the 3x3 grid") {
    const Graph g = build(GraphSpec::product(GraphSpec::chain(3, false), GraphSpec::chain(3, false)));
    // brute-force degree count of the 3x3 grid
    std::multiset<std::size_t> expected;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) expected.insert((x > 0) + (x < 2) + (y > 0) + (y < 2));
    std::multiset<std::size_t> got;
    for (std::size_t i = 0; i < g.size(); ++i) got.insert(g.degree(i));
    CHECK(got == expected);
    CHECK(got.count(2) == 4);
    CHECK(got.count(3) == 4);
    CHECK(got.count(4) == 1);
  }
  SUBCASE("dsg x square lattice") {
    const auto spec = GraphSpec::product(GraphSpec::dsg(4), GraphSpec::torus(8, 2));
    CHECK(spec.node_count() == 5184);
    const Graph a = build(spec.factors[0]);
    const Graph b = build(spec.factors[1]);
    const Graph g = build(spec);
    CHECK(g.size() == 5184);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) CHECK(g.degree(i * b.size() + j) == a.degree(i) + b.degree(j));
  }
}

TEST_CASE("default targets") {
  CHECK(default_target(GraphSpec::complete(5)).index == 0);
  CHECK(default_target(GraphSpec::torus(4, 2)).index == 0);
  for (int g = 2; g <= 5; ++g) {
    const auto spec = GraphSpec::dsg(g);
    const Graph graph = build(spec);
    const NodeId w = default_target(spec);
    CHECK(graph.degree(w.index) == 2);
    for (std::size_t i = 0; i < w.index; ++i) CHECK(graph.degree(i) != 2);
  }
  for (int g = 2; g <= 6; ++g) {
    const auto spec = GraphSpec::tfractal(g);
    const Graph graph = build(spec);
    const NodeId w = default_target(spec);
    CHECK(graph.degree(w.index) == 1);
    CHECK(graph.distances_from(0)[w.index] == (std::size_t{1} << (g - 1)));
  }
  for (int g = 2; g <= 6; ++g) {
    const auto spec = GraphSpec::cayley_tree(g);
    const Graph graph = build(spec);
    const NodeId w = default_target(spec);
    CHECK(graph.degree(w.index) == 1);
    CHECK(graph.distances_from(0)[w.index] == static_cast<std::size_t>(g));
    const NodeId c = select_target(spec, TargetRule::CenterNeighbor);
    CHECK(graph.distances_from(0)[c.index] == 1);
  }
  CHECK_THROWS_AS(select_target(GraphSpec::dsg(3), TargetRule::CenterNeighbor), ConfigError);
}

TEST_CASE("product targets") {
  const auto spec = GraphSpec::product(GraphSpec::dsg(3), GraphSpec::torus(4, 2));
  const Graph g = build(spec);
  const NodeId corner = default_target(spec);
  CHECK(g.degree(corner.index) == 2 + 4);
  const NodeId inner = select_target(spec, TargetRule::PeripheralNeighbor);
  CHECK(g.degree(inner.index) == 3 + 4);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(build(GraphSpec::dsg(0)), ConfigError);
  CHECK_THROWS_AS(build(GraphSpec::tfractal(0)), ConfigError);
  CHECK_THROWS_AS(build(GraphSpec::cayley_tree(0)), ConfigError);
  CHECK_THROWS_AS(build(GraphSpec::complete(1)), ConfigError);
  CHECK_THROWS_AS(build(GraphSpec::torus(1, 2)), ConfigError);
  CHECK_THROWS_AS(build(GraphSpec::torus(4, 0)), ConfigError);
  CHECK_THROWS_AS(family_from_string("hypercube"), ConfigError);
  const std::vector<Graph::Edge> loop{{0, 0}};
  CHECK_THROWS_AS(Graph(2, loop), ConfigError);
  const std::vector<Graph::Edge> dup{{0, 1}, {1, 0}};
  CHECK_THROWS_AS(Graph(2, dup), ConfigError);
  const std::vector<Graph::Edge> out{{0, 5}};
  CHECK_THROWS_AS(Graph(2, out), ConfigError);
}

TEST_CASE("construction is deterministic") {
  CHECK(build(GraphSpec::dsg(5)) == build(GraphSpec::dsg(5)));
  CHECK(build(GraphSpec::tfractal(5)) == build(GraphSpec::tfractal(5)));
}

TEST_CASE("spectral and fractal dimensions") {
  CHECK(*GraphSpec::dsg(3).spectral_dimension() == doctest::Approx(2.0 * std::log(3.0) / std::log(5.0)));
  CHECK(*GraphSpec::tfractal(3).spectral_dimension() == doctest::Approx(2.0 * std::log(3.0) / std::log(6.0)));
  CHECK(*GraphSpec::torus(4, 3).spectral_dimension() == 3.0);
  CHECK(*GraphSpec::product(GraphSpec::dsg(2), GraphSpec::torus(4, 2)).spectral_dimension() ==
        doctest::Approx(2.0 + 2.0 * std::log(3.0) / std::log(5.0)));
  CHECK_FALSE(GraphSpec::cayley_tree(3).spectral_dimension().has_value());
  CHECK_FALSE(GraphSpec::complete(3).spectral_dimension().has_value());
  CHECK(*GraphSpec::dsg(3).fractal_dimension() == doctest::Approx(std::log(3.0) / std::log(2.0)));
}

TEST_CASE("graph spec json round trip") {
  const auto spec = GraphSpec::product(GraphSpec::dsg(4), GraphSpec::torus(8, 2, false));
  const nlohmann::json j = spec;
  CHECK(j.at("family") == "product");
  CHECK(j.at("factors").size() == 2);
  CHECK(j.get<GraphSpec>() == spec);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"family": 3})").get<GraphSpec>(), ConfigError);
}

TEST_CASE("edge list round trip") {
  const Graph g = build(GraphSpec::cayley_tree(3));
  std::stringstream ss;
  write_edge_list(ss, g);
  CHECK(ss.str().rfind("# N=22\n", 0) == 0);
  CHECK(read_edge_list(ss) == g);
}
