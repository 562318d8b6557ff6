#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ctqw {

enum class Family { Complete, Chain, Torus, DSG, TFractal, CayleyTree, Product };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Index of a node in the canonical numbering of a built graph.
struct NodeId {
  std::size_t index = 0;
  auto operator<=>(const NodeId&) const = default;
};

/// Family descriptor. Only the fields relevant to `family` are read:
/// `n` for Complete, `length`/`dim`/`periodic` for Chain and Torus,
/// `generation` for the fractal families and `factors` for Product.
struct GraphSpec {
  Family family = Family::Complete;
  std::size_t n = 0;
  std::size_t length = 0;
  std::size_t dim = 1;
  int generation = 0;
  bool periodic = true;
  std::vector<GraphSpec> factors;

  static GraphSpec complete(std::size_t n);
  static GraphSpec chain(std::size_t length, bool periodic = true);
  static GraphSpec torus(std::size_t length, std::size_t dim, bool periodic = true);
  static GraphSpec dsg(int generation);
  static GraphSpec tfractal(int generation);
  static GraphSpec cayley_tree(int generation);
  static GraphSpec product(GraphSpec first, GraphSpec second);

  /// Throws ConfigError when parameters are out of range.
  void validate() const;

  /// Closed-form node count; validates first.
  std::size_t node_count() const;

  /// d̃ for families where it is defined; none for Complete and CayleyTree.
  std::optional<double> spectral_dimension() const;
  std::optional<double> fractal_dimension() const;

  /// Human readable label such as "dsg(g=4)".
  std::string label() const;

  bool operator==(const GraphSpec&) const = default;
};

void to_json(nlohmann::json& j, const GraphSpec& spec);
void from_json(const nlohmann::json& j, GraphSpec& spec);

/// Immutable undirected simple graph in compressed sparse row form.
class Graph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  /// Builds the CSR structure; rejects self-loops, duplicate edges and out-of-range endpoints.
  Graph(std::size_t node_count, std::span<const Edge> edges);

  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return adjacency_.size() / 2; }

  std::span<const std::size_t> neighbors(std::size_t node) const {
    return {adjacency_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }

  /// Edges with i < j, in lexicographic order.
  std::vector<Edge> edges() const;

  bool connected() const;

  /// Hop distances from `source`; unreachable nodes get SIZE_MAX.
  std::vector<std::size_t> distances_from(std::size_t source) const;

  /// Dense L = Z - A.
  Eigen::MatrixXd laplacian() const;

  /// y = L x for real or complex vectors.
  template <typename Vec>
  void apply_laplacian(const Vec& x, Vec& y) const {
    for (std::size_t i = 0; i < size(); ++i) {
      auto acc = static_cast<double>(degree(i)) * x[i];
      for (std::size_t j : neighbors(i)) acc -= x[j];
      y[i] = acc;
    }
  }

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
};

Graph build(const GraphSpec& spec);

/// Node (i, j) maps to i * b.size() + j.
Graph cartesian_product(const Graph& a, const Graph& b);

enum class TargetRule {
  /// DSG apex corner, outmost TF leaf, CT leaf, node 0 for vertex-transitive families.
  Peripheral,
  /// Nearest neighbour of the central node (trees only).
  CenterNeighbor,
  /// Lowest-index neighbour of the peripheral node. On DSG x lattice products this is the
  /// degree-3 DSG site, giving coordination 3 + 2d.
  PeripheralNeighbor,
};

TargetRule target_rule_from_string(const std::string& name);

NodeId default_target(const GraphSpec& spec);
NodeId select_target(const GraphSpec& spec, TargetRule rule);

/// "# N=<n>" header followed by one "i j" line per edge.
void write_edge_list(std::ostream& out, const Graph& graph);
Graph read_edge_list(std::istream& in);

}  // namespace ctqw
