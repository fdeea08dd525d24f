#include "energynet/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet {

Vector flow_forcing(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d) {
  Vector w = p_g - p_d;
  for (int i = 0; i < network.node_count(); ++i) {
    for (const auto& inc : network.graph.incident(i)) {
      const EdgeCost c = network.edge_cost(i, inc.neighbor);
      w(i) -= c.beta / (2.0 * c.alpha);
    }
  }
  // The beta terms cancel, so the sum of w is the supply gap. Whatever gap
  // passed the balance check is shared out evenly; otherwise the multipliers
  // drift at the gap's rate and never settle.
  w.array() -= w.mean();
  return w;
}

void require_balanced(const Vector& p_g, const Vector& p_d, double tol) {
  const double gap = p_g.sum() - p_d.sum();
  if (std::abs(gap) > tol * (1.0 + std::abs(p_d.sum()))) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "supply-demand imbalance: sum(p_g) - sum(p_d) = " << gap;
    throw PreconditionError(msg.str());
  }
}

Vector edge_multipliers(const Graph& graph, const Vector& lambda_v) {
  Vector out(graph.edge_count());
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto [i, j] = graph.edges()[e];
    out(e) = -0.5 * (lambda_v(i) + lambda_v(j));
  }
  return out;
}

FlowMap flow_rule(const EnergyNetwork& network, const Vector& lambda_v) {
  Vector values(network.graph.edge_count());
  for (int e = 0; e < network.graph.edge_count(); ++e) {
    const auto [i, j] = network.graph.edges()[e];
    const EdgeCost& c = network.flow[e];
    values(e) = -(c.beta + 0.5 * lambda_v(i) - 0.5 * lambda_v(j)) / (2.0 * c.alpha);
  }
  return FlowMap(network.graph, std::move(values));
}

FlowResult coordinate_flow(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d,
                           const FlowOptions& options) {
  require_valid(network, p_d);
  if (p_g.size() != p_d.size()) throw ValidationError("generation and desired vectors differ in length");
  require_balanced(p_g, p_d, options.balance_tol);

  const int n = network.node_count();
  LinearFlowProblem problem{weighted_laplacian(network.graph, network.flow_weights()),
                            flow_forcing(network, p_g, p_d), Vector::Zero(n), options.consensus};
  ConsensusRun run = integrate(problem);
  if (!run.stats.converged) {
    std::ostringstream msg;
    msg << "flow multipliers did not converge: residual " << run.stats.residual << " after t=" << run.stats.elapsed;
    throw NumericalError(msg.str());
  }

  FlowResult out;
  out.lambda_v = std::move(run.state);
  out.lambda_e = edge_multipliers(network.graph, out.lambda_v);
  out.flows = flow_rule(network, out.lambda_v);
  out.stats = run.stats;
  out.trace = std::move(run.trace);
  return out;
}

double FlowKktResiduals::max() const { return std::max({stationarity, node_balance, antisymmetry}); }

FlowKktResiduals flow_residuals(const EnergyNetwork& network, const Vector& lambda_v, const Vector& lambda_e,
                                const FlowMap& flows, const Vector& p_g, const Vector& p_d) {
  FlowKktResiduals r;
  const Graph& g = network.graph;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.edges()[e];
    for (const auto& [from, to] : {std::pair{i, j}, std::pair{j, i}}) {
      const EdgeCost c = network.edge_cost(from, to);
      const double s = 2.0 * c.alpha * flows.at(from, to) + c.beta + lambda_v(from) + lambda_e(e);
      r.stationarity = std::max(r.stationarity, std::abs(s));
    }
    r.antisymmetry = std::max(r.antisymmetry, std::abs(flows.at(i, j) + flows.at(j, i)));
  }
  for (int i = 0; i < g.node_count(); ++i) {
    double level = p_g(i) - p_d(i);
    for (const auto& inc : g.incident(i)) level += flows.at(i, inc.neighbor);
    r.node_balance = std::max(r.node_balance, std::abs(level));
  }
  return r;
}

FlowKktResiduals kkt_residuals(const EnergyNetwork& network, const FlowResult& result, const Vector& p_g,
                               const Vector& p_d) {
  return flow_residuals(network, result.lambda_v, result.lambda_e, result.flows, p_g, p_d);
}

}  // namespace energynet
