#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "energynet/graph.hpp"

namespace energynet {

/// Quadratic generation cost xi p^2 + zeta p + eta of one node.
struct GenCost {
  double xi = 1.0;    ///< cost / energy^2, must be > 0
  double zeta = 0.0;  ///< cost / energy
  double eta = 0.0;   ///< cost
};

using GenCostParams = std::vector<GenCost>;

/// Quadratic flow cost alpha p^2 + beta p + gamma of one edge, stated for the
/// canonical orientation. The reverse direction has the same alpha and gamma
/// and the opposite beta; it is never stored.
struct EdgeCost {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;

  EdgeCost reversed() const { return {alpha, -beta, gamma}; }
};

/// Aligned with Graph::edges().
using FlowCostParams = std::vector<EdgeCost>;

struct GenerationBounds {
  std::optional<double> lower;
  std::optional<double> upper;
};

struct EnergyNetwork {
  Graph graph;
  GenCostParams generation;
  FlowCostParams flow;
  std::vector<GenerationBounds> bounds;  ///< empty when no limits are set

  int node_count() const { return graph.node_count(); }

  /// Cost parameters of edge (from, to) as seen from `from`.
  EdgeCost edge_cost(int from, int to) const;

  Vector xi() const;
  Vector zeta() const;

  /// Flow-stage weights 1/(4 alpha) per edge.
  EdgeWeightMap flow_weights() const;
};

/// Antisymmetric energy flow on a graph. p(i,j) is the energy flowing into i
/// from j, so p(j,i) == -p(i,j) holds by construction.
class FlowMap {
 public:
  FlowMap() = default;
  explicit FlowMap(const Graph& graph) : edges_(graph.edges()), values_(Vector::Zero(graph.edge_count())) {}
  FlowMap(const Graph& graph, Vector canonical);

  /// Builds a map from a directed listing that must contain both orientations
  /// of every edge. Throws ValidationError when |p_ij + p_ji| > tol or an
  /// orientation is missing or unknown.
  static FlowMap from_directed(const Graph& graph, const std::map<std::pair<int, int>, double>& directed,
                               double tol = 0.0);

  double at(int i, int j) const;
  void set(int i, int j, double value);

  int size() const { return static_cast<int>(edges_.size()); }
  const std::vector<EdgeKey>& edges() const { return edges_; }
  const Vector& canonical() const { return values_; }

 private:
  int index_of(int i, int j) const;

  std::vector<EdgeKey> edges_;
  Vector values_;
};

/// sum_i xi_i p_i^2 + zeta_i p_i + eta_i
double generation_cost(const GenCostParams& params, const Vector& p_g);

/// Sums g(p_ij) over both orientations of every edge, so each undirected edge
/// contributes 2 alpha p^2 + 2 beta p + 2 gamma.
double flow_cost(const FlowCostParams& params, const FlowMap& flows);

/// Same as above for a directed listing; throws ValidationError if the
/// listing is not antisymmetric.
double flow_cost(const Graph& graph, const FlowCostParams& params,
                 const std::map<std::pair<int, int>, double>& directed);

/// Coefficients of the parabola with minimum value `min_value` at `min_location`.
GenCost params_from_minimum(double xi, double min_location, double min_value);

/// Every problem found in the network: nonpositive xi or alpha, parameter maps
/// that do not match the graph, inverted bounds, disconnected graph.
std::vector<std::string> validate(const EnergyNetwork& network);

/// Throws PreconditionError for a disconnected graph, ValidationError for any
/// other violation, or when a per-node vector does not match the node count.
void require_valid(const EnergyNetwork& network, const Vector& per_node);

}  // namespace energynet
