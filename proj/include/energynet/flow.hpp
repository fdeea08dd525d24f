#pragma once

#include <vector>

#include "energynet/consensus.hpp"
#include "energynet/cost_model.hpp"

namespace energynet {

struct FlowOptions {
  ConsensusOptions consensus;
  double balance_tol = 1e-6;  ///< relative, scaled by 1 + |sum p_d|
};

struct FlowResult {
  Vector lambda_v;  ///< per-node multiplier
  Vector lambda_e;  ///< per-canonical-edge multiplier
  FlowMap flows;
  RunStats stats;
  std::vector<TraceSample> trace;
};

/// w_i = -sum_{j in N_i} beta_ij / (2 alpha_ij) + (p_i^g - p_i^d), less its
/// mean so that a gap within the balance tolerance does not make lambda_v drift.
Vector flow_forcing(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d);

/// Throws PreconditionError when |sum p_g - sum p_d| > tol (1 + |sum p_d|).
void require_balanced(const Vector& p_g, const Vector& p_d, double tol);

/// lambda_e(i,j) = -(lambda_i + lambda_j) / 2 for every canonical edge.
Vector edge_multipliers(const Graph& graph, const Vector& lambda_v);

/// p_ij = -(beta_ij + lambda_i/2 - lambda_j/2) / (2 alpha_ij)
FlowMap flow_rule(const EnergyNetwork& network, const Vector& lambda_v);

/// Propagates d(lambda_v)/dt = -L lambda_v + w from zero and applies the flow
/// rule to the converged multipliers.
FlowResult coordinate_flow(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d,
                           const FlowOptions& options = {});

struct FlowKktResiduals {
  double stationarity = 0.0;  ///< max |2 alpha p_ij + beta_ij + lambda_i + lambda_e|, both orientations
  double node_balance = 0.0;  ///< max |sum_j p_ij + p_i^g - p_i^d|
  double antisymmetry = 0.0;  ///< max |p_ij + p_ji|

  double max() const;
};

FlowKktResiduals kkt_residuals(const EnergyNetwork& network, const FlowResult& result, const Vector& p_g,
                               const Vector& p_d);

/// The three residual components for arbitrary multipliers and flows; shared
/// with the joint residual check.
FlowKktResiduals flow_residuals(const EnergyNetwork& network, const Vector& lambda_v, const Vector& lambda_e,
                                const FlowMap& flows, const Vector& p_g, const Vector& p_d);

}  // namespace energynet
