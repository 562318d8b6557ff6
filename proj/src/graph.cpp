#include "ctqw/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ctqw/error.hpp"

namespace ctqw {

namespace {

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / base) {
      throw ConfigError("graph size overflows size_t");
    }
    r *= base;
  }
  return r;
}

// Largest accepted fractal or tree generation.
constexpr int kMaxGeneration = 20;

std::vector<Graph::Edge> complete_edges(std::size_t n) {
  std::vector<Graph::Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return edges;
}

// Row-major coordinates, first coordinate most significant.
std::vector<Graph::Edge> lattice_edges(std::size_t length, std::size_t dim, bool periodic) {
  const std::size_t n = ipow(length, dim);
  std::vector<Graph::Edge> edges;
  std::vector<std::size_t> stride(dim);
  for (std::size_t k = 0; k < dim; ++k) stride[k] = ipow(length, dim - 1 - k);
  for (std::size_t node = 0; node < n; ++node) {
    for (std::size_t k = 0; k < dim; ++k) {
      const std::size_t c = (node / stride[k]) % length;
      if (c + 1 < length) {
        edges.emplace_back(node, node + stride[k]);
      } else if (periodic && length > 2) {
        // wrap-around edge; for L = 2 it would duplicate the open edge
        edges.emplace_back(node - c * stride[k], node);
      }
    }
  }
  return edges;
}

struct Gasket {
  std::size_t size;
  std::vector<Graph::Edge> edges;
  std::size_t top, left, right;
};

// Generation 1 is a triangle. Generation g places copies top, bottom-left,
// bottom-right and joins adjacent corners with single edges.
Gasket dsg_gasket(int generation) {
  Gasket gk{3, {{0, 1}, {0, 2}, {1, 2}}, 0, 1, 2};
  for (int g = 2; g <= generation; ++g) {
    const std::size_t n = gk.size;
    Gasket next{3 * n, {}, 0, 0, 0};
    next.edges.reserve(3 * gk.edges.size() + 3);
    for (std::size_t copy = 0; copy < 3; ++copy)
      for (auto [a, b] : gk.edges) next.edges.emplace_back(a + copy * n, b + copy * n);
    const std::size_t t = 0, bl = n, br = 2 * n;
    next.edges.emplace_back(t + gk.left, bl + gk.top);
    next.edges.emplace_back(t + gk.right, br + gk.top);
    next.edges.emplace_back(bl + gk.right, br + gk.left);
    next.top = t + gk.top;
    next.left = bl + gk.left;
    next.right = br + gk.right;
    gk = std::move(next);
  }
  return gk;
}

// Relabels nodes in breadth-first order from `root`, visiting neighbours in
// ascending old index.
Graph bfs_relabel(const Graph& g, std::size_t root) {
  std::vector<std::size_t> order;
  order.reserve(g.size());
  std::vector<std::size_t> label(g.size(), std::numeric_limits<std::size_t>::max());
  label[root] = 0;
  order.push_back(root);
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (std::size_t nb : g.neighbors(order[head])) {
      if (label[nb] == std::numeric_limits<std::size_t>::max()) {
        label[nb] = order.size();
        order.push_back(nb);
      }
    }
  }
  std::vector<Graph::Edge> edges;
  for (auto [a, b] : g.edges()) edges.emplace_back(label[a], label[b]);
  return Graph(g.size(), edges);
}

Graph tfractal_graph(int generation) {
  std::vector<Graph::Edge> edges{{0, 1}};
  std::size_t n = 2;
  for (int g = 0; g < generation; ++g) {
    std::vector<Graph::Edge> next;
    next.reserve(3 * edges.size());
    for (auto [a, b] : edges) {
      const std::size_t mid = n++;
      const std::size_t branch = n++;
      next.emplace_back(a, mid);
      next.emplace_back(mid, b);
      next.emplace_back(mid, branch);
    }
    edges = std::move(next);
  }
  // node 2 is the midpoint of the generation-0 edge
  return bfs_relabel(Graph(n, edges), 2);
}

Graph cayley_graph(int generation) {
  std::vector<Graph::Edge> edges;
  std::vector<std::size_t> shell{0};
  std::size_t n = 1;
  for (int s = 0; s < generation; ++s) {
    std::vector<std::size_t> next;
    for (std::size_t parent : shell) {
      const int children = parent == 0 ? 3 : 2;
      for (int c = 0; c < children; ++c) {
        edges.emplace_back(parent, n);
        next.push_back(n++);
      }
    }
    shell = std::move(next);
  }
  return Graph(n, edges);
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Complete: return "complete";
    case Family::Chain: return "chain";
    case Family::Torus: return "torus";
    case Family::DSG: return "dsg";
    case Family::TFractal: return "tfractal";
    case Family::CayleyTree: return "cayley";
    case Family::Product: return "product";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "complete") return Family::Complete;
  if (name == "chain") return Family::Chain;
  if (name == "torus" || name == "lattice") return Family::Torus;
  if (name == "dsg") return Family::DSG;
  if (name == "tfractal" || name == "tf") return Family::TFractal;
  if (name == "cayley" || name == "ct") return Family::CayleyTree;
  if (name == "product") return Family::Product;
  throw ConfigError("unknown graph family '" + name + "'", "invalid_spec");
}

GraphSpec GraphSpec::complete(std::size_t n) {
  GraphSpec s;
  s.family = Family::Complete;
  s.n = n;
  return s;
}

GraphSpec GraphSpec::chain(std::size_t length, bool periodic) {
  GraphSpec s;
  s.family = Family::Chain;
  s.length = length;
  s.dim = 1;
  s.periodic = periodic;
  return s;
}

GraphSpec GraphSpec::torus(std::size_t length, std::size_t dim, bool periodic) {
  GraphSpec s;
  s.family = Family::Torus;
  s.length = length;
  s.dim = dim;
  s.periodic = periodic;
  return s;
}

GraphSpec GraphSpec::dsg(int generation) {
  GraphSpec s;
  s.family = Family::DSG;
  s.generation = generation;
  return s;
}

GraphSpec GraphSpec::tfractal(int generation) {
  GraphSpec s;
  s.family = Family::TFractal;
  s.generation = generation;
  return s;
}

GraphSpec GraphSpec::cayley_tree(int generation) {
  GraphSpec s;
  s.family = Family::CayleyTree;
  s.generation = generation;
  return s;
}

GraphSpec GraphSpec::product(GraphSpec first, GraphSpec second) {
  GraphSpec s;
  s.family = Family::Product;
  s.factors = {std::move(first), std::move(second)};
  return s;
}

void GraphSpec::validate() const {
  auto fail = [&](const std::string& why) { throw ConfigError(label() + ": " + why, "invalid_spec"); };
  switch (family) {
    case Family::Complete:
      if (n < 2) fail("complete graph needs n >= 2");
      break;
    case Family::Chain:
      if (length < 2) fail("chain needs L >= 2");
      if (dim != 1) fail("chain has d = 1");
      break;
    case Family::Torus:
      if (length < 2) fail("lattice needs L >= 2");
      if (dim < 1) fail("lattice needs d >= 1");
      break;
    case Family::DSG:
    case Family::TFractal:
    case Family::CayleyTree:
      if (generation < 1) fail("generation must be >= 1");
      if (generation > kMaxGeneration) fail("generation too large");
      break;
    case Family::Product:
      if (factors.size() != 2) fail("product needs exactly two factors");
      factors[0].validate();
      factors[1].validate();
      break;
  }
}

std::size_t GraphSpec::node_count() const {
  validate();
  const auto g = static_cast<std::size_t>(generation);
  switch (family) {
    case Family::Complete: return n;
    case Family::Chain: return length;
    case Family::Torus: return ipow(length, dim);
    case Family::DSG: return ipow(3, g);
    case Family::TFractal: return ipow(3, g) + 1;
    case Family::CayleyTree: return 3 * ipow(2, g) - 2;
    case Family::Product: {
      const std::size_t a = factors[0].node_count();
      const std::size_t b = factors[1].node_count();
      if (a > std::numeric_limits<std::size_t>::max() / b) throw ConfigError("product size overflows");
      return a * b;
    }
  }
  return 0;
}

std::optional<double> GraphSpec::spectral_dimension() const {
  switch (family) {
    case Family::Chain: return 1.0;
    case Family::Torus: return static_cast<double>(dim);
    case Family::DSG: return 2.0 * std::log(3.0) / std::log(5.0);
    case Family::TFractal: return 2.0 * std::log(3.0) / std::log(6.0);
    case Family::Product: {
      if (factors.size() != 2) return std::nullopt;
      auto a = factors[0].spectral_dimension();
      auto b = factors[1].spectral_dimension();
      if (a && b) return *a + *b;
      return std::nullopt;
    }
    case Family::Complete:
    case Family::CayleyTree: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> GraphSpec::fractal_dimension() const {
  switch (family) {
    case Family::Chain: return 1.0;
    case Family::Torus: return static_cast<double>(dim);
    case Family::DSG:
    case Family::TFractal: return std::log(3.0) / std::log(2.0);
    case Family::Product: {
      if (factors.size() != 2) return std::nullopt;
      auto a = factors[0].fractal_dimension();
      auto b = factors[1].fractal_dimension();
      if (a && b) return *a + *b;
      return std::nullopt;
    }
    case Family::Complete:
    case Family::CayleyTree: return std::nullopt;
  }
  return std::nullopt;
}

std::string GraphSpec::label() const {
  std::ostringstream os;
  os << to_string(family) << '(';
  switch (family) {
    case Family::Complete: os << "n=" << n; break;
    case Family::Chain: os << "L=" << length << (periodic ? "" : ",open"); break;
    case Family::Torus: os << "L=" << length << ",d=" << dim << (periodic ? "" : ",open"); break;
    case Family::DSG:
    case Family::TFractal:
    case Family::CayleyTree: os << "g=" << generation; break;
    case Family::Product:
      for (std::size_t i = 0; i < factors.size(); ++i) os << (i ? " x " : "") << factors[i].label();
      break;
  }
  os << ')';
  return os.str();
}

void to_json(nlohmann::json& j, const GraphSpec& spec) {
  j = nlohmann::json{{"family", to_string(spec.family)}};
  switch (spec.family) {
    case Family::Complete: j["n"] = spec.n; break;
    case Family::Chain:
      j["L"] = spec.length;
      j["periodic"] = spec.periodic;
      break;
    case Family::Torus:
      j["L"] = spec.length;
      j["d"] = spec.dim;
      j["periodic"] = spec.periodic;
      break;
    case Family::DSG:
    case Family::TFractal:
    case Family::CayleyTree: j["g"] = spec.generation; break;
    case Family::Product: j["factors"] = spec.factors; break;
  }
}

void from_json(const nlohmann::json& j, GraphSpec& spec) {
  try {
    spec = GraphSpec{};
    spec.family = family_from_string(j.at("family").get<std::string>());
    if (j.contains("n")) spec.n = j.at("n").get<std::size_t>();
    if (j.contains("L")) spec.length = j.at("L").get<std::size_t>();
    if (j.contains("d")) spec.dim = j.at("d").get<std::size_t>();
    if (j.contains("g")) spec.generation = j.at("g").get<int>();
    if (j.contains("periodic")) spec.periodic = j.at("periodic").get<bool>();
    if (j.contains("factors")) spec.factors = j.at("factors").get<std::vector<GraphSpec>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed graph spec: ") + e.what(), "invalid_spec");
  }
}

Graph::Graph(std::size_t node_count, std::span<const Edge> edges) {
  std::vector<std::vector<std::size_t>> lists(node_count);
  for (auto [a, b] : edges) {
    if (a >= node_count || b >= node_count) throw ConfigError("edge endpoint out of range");
    if (a == b) throw ConfigError("self-loop at node " + std::to_string(a));
    lists[a].push_back(b);
    lists[b].push_back(a);
  }
  offsets_.assign(node_count + 1, 0);
  adjacency_.reserve(2 * edges.size());
  for (std::size_t i = 0; i < node_count; ++i) {
    auto& nb = lists[i];
    std::sort(nb.begin(), nb.end());
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
      throw ConfigError("duplicate edge at node " + std::to_string(i));
    }
    adjacency_.insert(adjacency_.end(), nb.begin(), nb.end());
    offsets_[i + 1] = adjacency_.size();
  }
}

std::vector<Graph::Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  return out;
}

std::vector<std::size_t> Graph::distances_from(std::size_t source) const {
  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(size(), kUnreached);
  std::vector<std::size_t> queue{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t u = queue[head];
    for (std::size_t v : neighbors(u)) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

bool Graph::connected() const {
  if (size() == 0) return false;
  const auto dist = distances_from(0);
  return std::none_of(dist.begin(), dist.end(),
                      [](std::size_t d) { return d == std::numeric_limits<std::size_t>::max(); });
}

Eigen::MatrixXd Graph::laplacian() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lap(ii, ii) = static_cast<double>(degree(i));
    for (std::size_t j : neighbors(i)) lap(ii, static_cast<Eigen::Index>(j)) = -1.0;
  }
  return lap;
}

Graph build(const GraphSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::Complete: {
      const auto edges = complete_edges(spec.n);
      return Graph(spec.n, edges);
    }
    case Family::Chain:
    case Family::Torus: {
      const auto edges = lattice_edges(spec.length, spec.dim, spec.periodic);
      return Graph(spec.node_count(), edges);
    }
    case Family::DSG: {
      const auto gk = dsg_gasket(spec.generation);
      return Graph(gk.size, gk.edges);
    }
    case Family::TFractal: return tfractal_graph(spec.generation);
    case Family::CayleyTree: return cayley_graph(spec.generation);
    case Family::Product: return cartesian_product(build(spec.factors[0]), build(spec.factors[1]));
  }
  throw ConfigError("unhandled family");
}

Graph cartesian_product(const Graph& a, const Graph& b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na != 0 && nb > std::numeric_limits<std::size_t>::max() / na) {
    throw ConfigError("product size overflows");
  }
  std::vector<Graph::Edge> edges;
  edges.reserve(na * b.edge_count() + nb * a.edge_count());
  for (std::size_t i = 0; i < na; ++i)
    for (auto [x, y] : b.edges()) edges.emplace_back(i * nb + x, i * nb + y);
  for (auto [x, y] : a.edges())
    for (std::size_t j = 0; j < nb; ++j) edges.emplace_back(x * nb + j, y * nb + j);
  return Graph(na * nb, edges);
}

TargetRule target_rule_from_string(const std::string& name) {
  if (name == "peripheral") return TargetRule::Peripheral;
  if (name == "center-neighbor" || name == "central") return TargetRule::CenterNeighbor;
  if (name == "peripheral-neighbor") return TargetRule::PeripheralNeighbor;
  throw ConfigError("unknown target rule '" + name + "'");
}

NodeId default_target(const GraphSpec& spec) { return select_target(spec, TargetRule::Peripheral); }

NodeId select_target(const GraphSpec& spec, TargetRule rule) {
  spec.validate();
  if (spec.family == Family::Product) {
    const NodeId first = select_target(spec.factors[0], rule);
    return NodeId{first.index * spec.factors[1].node_count()};
  }

  NodeId peripheral{0};
  if (spec.family == Family::TFractal) {
    // outmost leaf: lowest BFS index at distance 2^(g-1) from the centre (node 0)
    const Graph g = build(spec);
    const auto dist = g.distances_from(0);
    const std::size_t radius = std::size_t{1} << (spec.generation - 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (dist[i] == radius && g.degree(i) == 1) {
        peripheral = NodeId{i};
        break;
      }
    }
  } else if (spec.family == Family::CayleyTree) {
    // first node of the outermost shell
    peripheral = NodeId{spec.node_count() - 3 * (std::size_t{1} << (spec.generation - 1))};
  }
  // DSG: node 0 is the apex corner, the lowest-index degree-2 node.

  switch (rule) {
    case TargetRule::Peripheral: return peripheral;
    case TargetRule::CenterNeighbor:
      if (spec.family != Family::TFractal && spec.family != Family::CayleyTree) {
        throw ConfigError("center-neighbor target is defined for tree families only");
      }
      return NodeId{1};  // both trees are numbered breadth-first from the centre
    case TargetRule::PeripheralNeighbor: {
      const Graph g = build(spec);
      return NodeId{g.neighbors(peripheral.index).front()};
    }
  }
  return peripheral;
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  out << "# N=" << graph.size() << '\n';
  for (auto [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<Graph::Edge> edges;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("N=");
      if (pos != std::string::npos) {
        n = std::stoul(line.substr(pos + 2));
        have_header = true;
      }
      continue;
    }
    std::istringstream is(line);
    std::size_t a = 0, b = 0;
    if (!(is >> a >> b)) throw ConfigError("malformed edge line: " + line);
    edges.emplace_back(a, b);
  }
  if (!have_header) throw ConfigError("edge list lacks '# N=' header");
  return Graph(n, edges);
}

}  // namespace ctqw
