#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace energynet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Undirected edge in canonical orientation: first < second (0-based node
/// indices). The canonical direction plays the role of the positive edge set.
struct EdgeKey {
  int first = 0;
  int second = 0;

  /// Builds the canonical key for either orientation of an edge.
  static EdgeKey canonical(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

  auto operator<=>(const EdgeKey&) const = default;
};

/// One edge seen from one of its endpoints.
struct Incidence {
  int edge = 0;      ///< index into Graph::edges()
  int neighbor = 0;  ///< the other endpoint
  int sign = 0;      ///< +1 if this node is the canonical first endpoint, -1 otherwise
};

/// Undirected simple graph on nodes 0..n-1. Edges are stored once, sorted
/// lexicographically, so every derived matrix has a deterministic column order.
/// Immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Throws ValidationError on self-loops, duplicate edges, out-of-range
  /// endpoints or an empty node set.
  Graph(int node_count, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  const std::vector<EdgeKey>& edges() const { return edges_; }
  const std::vector<Incidence>& incident(int node) const { return incident_[node]; }
  std::vector<int> neighbors(int node) const;

  /// Index of the edge joining a and b (either orientation), if present.
  std::optional<int> edge_index(int a, int b) const;

 private:
  int node_count_ = 0;
  std::vector<EdgeKey> edges_;
  std::vector<std::vector<Incidence>> incident_;
};

/// Positive scalar weight per canonical edge.
class EdgeWeightMap {
 public:
  void set(int a, int b, double weight) { weights_[EdgeKey::canonical(a, b)] = weight; }
  std::optional<double> find(int a, int b) const;
  std::size_t size() const { return weights_.size(); }

 private:
  std::map<EdgeKey, double> weights_;
};

bool is_connected(const Graph& graph);

/// L = D - A with A(i,j) = w(i,j) on edges. Throws ValidationError naming the
/// first edge without a weight, or any nonpositive weight.
Matrix weighted_laplacian(const Graph& graph, const EdgeWeightMap& weights);

/// Laplacian with unit weights.
Matrix laplacian(const Graph& graph);

/// n x m signed incidence matrix: column e has +1 at the canonical first
/// endpoint and -1 at the second.
Matrix incidence_matrix(const Graph& graph);

/// Laplacian of the complete graph whose (i,j) weight is
/// 1 / (2 xi_i xi_j sum_l 1/xi_l). Throws ValidationError for nonpositive xi.
Matrix complete_graph_laplacian(std::span<const double> xi);

/// Second-smallest eigenvalue of a symmetric Laplacian (0 for n == 1).
double algebraic_connectivity(const Matrix& laplacian);

/// Upper bound on the spectral radius: exact for symmetric matrices,
/// the infinity norm otherwise.
double spectral_radius_bound(const Matrix& m);

}  // namespace energynet
