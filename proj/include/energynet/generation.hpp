#pragma once

#include <optional>
#include <span>
#include <vector>

#include "energynet/consensus.hpp"
#include "energynet/cost_model.hpp"

namespace energynet {

struct GenerationOptions {
  ConsensusOptions consensus;
  double balance_tol = 1e-6;  ///< relative, scaled by 1 + |sum p_d|
};

struct GenerationResult {
  double lambda_star = 0.0;  ///< balance multiplier (node average of the estimates)
  Vector lambda_per_node;    ///< estimate each node used for its own p_g
  Vector p_g;
  RunStats numerator;        ///< u consensus
  RunStats denominator;      ///< v consensus
  std::vector<TraceSample> numerator_trace;
  std::vector<TraceSample> denominator_trace;
};

/// Distributed dispatch: ratio consensus over v_i(0) = 1/(2 xi_i) and
/// u_i(0) = p_i^d + zeta_i/(2 xi_i), then p_i^g = -(lambda_i + zeta_i)/(2 xi_i).
GenerationResult coordinate_generation(const EnergyNetwork& network, const Vector& p_d,
                                       const GenerationOptions& options = {});

/// lambda = -sum(p_d + zeta/(2 xi)) / sum(1/(2 xi))
double closed_form_lambda(const EnergyNetwork& network, const Vector& p_d);

/// p_i^g = -(lambda_i + zeta_i) / (2 xi_i) for per-node multipliers.
Vector generation_from_lambda(const EnergyNetwork& network, const Vector& lambda_per_node);

struct NodeBoundsCheck {
  std::optional<double> lower;
  std::optional<double> upper;
  double p_g = 0.0;
  double probe = 0.0;  ///< distributed estimate of the closed-form p_g
  bool feasible = true;
  bool probe_feasible = true;
  /// Only filled when every zeta is equal: sum_j xi_i / xi_j and whether
  /// p^D / upper <= that sum <= p^D / lower.
  std::optional<double> xi_ratio_sum;
  std::optional<bool> sufficient_condition;
};

struct BoundsReport {
  std::vector<NodeBoundsCheck> nodes;
  bool uniform_zeta = false;
  double total_demand = 0.0;
  bool all_feasible = true;
};

/// Verifies (does not enforce) lower <= p_g <= upper per node. The probe runs
/// the x/y/z consensus with x(0) = p_d, y(0) = 1/(2 xi), z(0) = zeta/(2 xi) and
/// evaluates (x*/y* + z*/y* - zeta_i) / (2 xi_i).
BoundsReport check_generation_bounds(const EnergyNetwork& network, const Vector& p_d,
                                     const GenerationResult& result, std::span<const GenerationBounds> bounds,
                                     const ConsensusOptions& options = {});

}  // namespace energynet
