#include "energynet/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet {

namespace {

std::string edge_name(int a, int b) {
  std::ostringstream out;
  out << "(" << a + 1 << "," << b + 1 << ")";
  return out.str();
}

}  // namespace

EdgeCost EnergyNetwork::edge_cost(int from, int to) const {
  const auto e = graph.edge_index(from, to);
  if (!e) throw ValidationError("no edge " + edge_name(from, to));
  const EdgeCost& c = flow.at(*e);
  return from < to ? c : c.reversed();
}

Vector EnergyNetwork::xi() const {
  Vector out(node_count());
  for (int i = 0; i < node_count(); ++i) out(i) = generation[i].xi;
  return out;
}

Vector EnergyNetwork::zeta() const {
  Vector out(node_count());
  for (int i = 0; i < node_count(); ++i) out(i) = generation[i].zeta;
  return out;
}

EdgeWeightMap EnergyNetwork::flow_weights() const {
  EdgeWeightMap weights;
  for (int e = 0; e < graph.edge_count(); ++e) {
    weights.set(graph.edges()[e].first, graph.edges()[e].second, 1.0 / (4.0 * flow[e].alpha));
  }
  return weights;
}

FlowMap::FlowMap(const Graph& graph, Vector canonical) : edges_(graph.edges()), values_(std::move(canonical)) {
  if (values_.size() != graph.edge_count()) {
    throw ValidationError("flow vector has " + std::to_string(values_.size()) + " entries, graph has " +
                          std::to_string(graph.edge_count()) + " edges");
  }
}

FlowMap FlowMap::from_directed(const Graph& graph, const std::map<std::pair<int, int>, double>& directed,
                               double tol) {
  FlowMap out(graph);
  std::vector<std::string> violations;
  for (const auto& [key, value] : directed) {
    if (!graph.edge_index(key.first, key.second)) {
      violations.push_back("flow on unknown edge " + edge_name(key.first, key.second));
    }
  }
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto [i, j] = graph.edges()[e];
    const auto fwd = directed.find({i, j});
    const auto rev = directed.find({j, i});
    if (fwd == directed.end() || rev == directed.end()) {
      violations.push_back("flow on edge " + edge_name(i, j) + " is missing an orientation");
      continue;
    }
    if (std::abs(fwd->second + rev->second) > tol) {
      std::ostringstream msg;
      msg << "flow on edge " << edge_name(i, j) << " is not antisymmetric: p_ij=" << fwd->second
          << " p_ji=" << rev->second;
      violations.push_back(msg.str());
      continue;
    }
    out.values_(e) = 0.5 * (fwd->second - rev->second);
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return out;
}

int FlowMap::index_of(int i, int j) const {
  const auto key = EdgeKey::canonical(i, j);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) throw ValidationError("no edge " + edge_name(i, j));
  return static_cast<int>(it - edges_.begin());
}

double FlowMap::at(int i, int j) const {
  const double v = values_(index_of(i, j));
  return i < j ? v : -v;
}

void FlowMap::set(int i, int j, double value) { values_(index_of(i, j)) = i < j ? value : -value; }

double generation_cost(const GenCostParams& params, const Vector& p_g) {
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double p = p_g(static_cast<Eigen::Index>(i));
    total += params[i].xi * p * p + params[i].zeta * p + params[i].eta;
  }
  return total;
}

double flow_cost(const FlowCostParams& params, const FlowMap& flows) {
  double total = 0.0;
  for (int e = 0; e < flows.size(); ++e) {
    const double p = flows.canonical()(e);
    const EdgeCost& fwd = params[e];
    const EdgeCost rev = fwd.reversed();
    total += fwd.alpha * p * p + fwd.beta * p + fwd.gamma;
    total += rev.alpha * p * p + rev.beta * (-p) + rev.gamma;
  }
  return total;
}

double flow_cost(const Graph& graph, const FlowCostParams& params,
                 const std::map<std::pair<int, int>, double>& directed) {
  return flow_cost(params, FlowMap::from_directed(graph, directed));
}

GenCost params_from_minimum(double xi, double min_location, double min_value) {
  return {xi, -2.0 * xi * min_location, min_value + xi * min_location * min_location};
}

std::vector<std::string> validate(const EnergyNetwork& network) {
  std::vector<std::string> violations;
  const Graph& g = network.graph;
  if (static_cast<int>(network.generation.size()) != g.node_count()) {
    violations.push_back("generation cost parameters cover " + std::to_string(network.generation.size()) +
                         " nodes, graph has " + std::to_string(g.node_count()));
  }
  if (static_cast<int>(network.flow.size()) != g.edge_count()) {
    violations.push_back("flow cost parameters cover " + std::to_string(network.flow.size()) +
                         " edges, graph has " + std::to_string(g.edge_count()));
  }
  for (std::size_t i = 0; i < network.generation.size(); ++i) {
    const double xi = network.generation[i].xi;
    if (!(xi > 0.0) || !std::isfinite(xi)) {
      violations.push_back("xi of node " + std::to_string(i + 1) + " must be positive");
    }
    if (!std::isfinite(network.generation[i].zeta) || !std::isfinite(network.generation[i].eta)) {
      violations.push_back("cost coefficients of node " + std::to_string(i + 1) + " must be finite");
    }
  }
  for (std::size_t e = 0; e < network.flow.size() && e < g.edges().size(); ++e) {
    const auto [i, j] = g.edges()[e];
    const double alpha = network.flow[e].alpha;
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      violations.push_back("alpha of edge " + edge_name(i, j) + " must be positive");
    }
    if (!std::isfinite(network.flow[e].beta) || !std::isfinite(network.flow[e].gamma)) {
      violations.push_back("cost coefficients of edge " + edge_name(i, j) + " must be finite");
    }
  }
  if (!network.bounds.empty()) {
    if (static_cast<int>(network.bounds.size()) != g.node_count()) {
      violations.push_back("generation bounds cover " + std::to_string(network.bounds.size()) + " nodes, graph has " +
                           std::to_string(g.node_count()));
    }
    for (std::size_t i = 0; i < network.bounds.size(); ++i) {
      const auto& b = network.bounds[i];
      if (b.lower && b.upper && *b.lower > *b.upper) {
        violations.push_back("generation bounds of node " + std::to_string(i + 1) + " are inverted");
      }
    }
  }
  if (g.node_count() > 0 && !is_connected(g)) violations.push_back("graph not connected");
  return violations;
}

void require_valid(const EnergyNetwork& network, const Vector& per_node) {
  auto violations = validate(network);
  if (per_node.size() != network.node_count()) {
    violations.push_back("per-node vector has " + std::to_string(per_node.size()) + " entries, network has " +
                         std::to_string(network.node_count()) + " nodes");
  }
  if (violations.empty()) return;
  if (violations.size() == 1 && violations.front() == "graph not connected") {
    throw PreconditionError("graph not connected");
  }
  throw ValidationError(std::move(violations));
}

}  // namespace energynet
