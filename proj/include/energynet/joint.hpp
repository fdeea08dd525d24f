#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "energynet/consensus.hpp"
#include "energynet/cost_model.hpp"
#include "energynet/flow.hpp"

namespace energynet {

enum class JointAlgorithm { Recursive, TwoScale, Oracle };

std::string_view to_string(JointAlgorithm algorithm);

struct JointResult {
  JointAlgorithm algorithm = JointAlgorithm::TwoScale;
  double lambda = 0.0;  ///< balance multiplier (node average of the estimates)
  Vector lambda_per_node;
  Vector lambda_v;
  Vector lambda_e;
  Vector p_g;
  FlowMap flows;

  bool converged = false;
  bool diverged = false;
  long iterations = 0;   ///< recursions, or outer steps
  double elapsed = 0.0;  ///< simulated outer time (two-scale only)
  double residual = 0.0;
  std::vector<Vector> history;  ///< p_g after every recursion
  std::vector<TraceSample> trace;
};

struct RecursiveOptions {
  std::vector<double> epsilon;  ///< per-node stop threshold; empty means 1e-6 everywhere
  int max_iter = 100;
  /// Fraction of the generation update applied per recursion. 1 is the plain
  /// alternation, which oscillates once recursion_rate_bound reaches 1;
  /// 0 selects 2 / (2 + recursion_rate_bound).
  double relaxation = 1.0;
  ConsensusOptions consensus;
  double balance_tol = 1e-6;
};

struct TwoScaleOptions {
  double dt = 0.0;          ///< outer step; 0 selects it from the stability bound
  double inner_tol = 1e-12; ///< inner consensus stop tolerance
  double outer_tol = 1e-9;  ///< outer stop tolerance on ||d(lambda_v)/dt||_inf
  double t_max = 1e4;
  std::optional<long> inner_budget;  ///< caps inner steps per outer instant
  int trace_stride = 10;
  bool record_trace = false;

  /// Throws ValidationError unless 0 < inner_tol < outer_tol and t_max > 0.
  void validate() const;
};

/// w_J,i = -sum_j beta_ij/(2 alpha_ij) - zeta_i/(2 xi_i) - p_i^d
///         + sum_j (zeta_j/(2 xi_j) + p_j^d) / (xi_i sum_j 1/xi_j)
Vector joint_forcing(const EnergyNetwork& network, const Vector& p_d);

/// L_G + L_G^k: flow-weighted Laplacian plus the complete-graph coupling term.
Matrix joint_system_matrix(const EnergyNetwork& network);

/// lambda = -sum(zeta/(2 xi) + lambda_v/(2 xi) + p_d) / sum(1/(2 xi))
double joint_lambda(const EnergyNetwork& network, const Vector& p_d, const Vector& lambda_v);

/// p_i^g = -(zeta_i + lambda_i + lambda_v_i) / (2 xi_i)
Vector joint_generation(const EnergyNetwork& network, const Vector& lambda_per_node, const Vector& lambda_v);

/// Largest mu such that -mu is an eigenvalue of the linear part of one
/// recursion. Relaxation w converges iff w (1 + mu) < 2.
double recursion_rate_bound(const EnergyNetwork& network);

/// The requested relaxation, or the automatic choice for 0. Throws
/// ValidationError outside [0, 1].
double resolve_relaxation(const EnergyNetwork& network, double requested);

/// Alternates the flow stage and the generation update until every node
/// moves less than its epsilon. Non-convergence is reported, not thrown.
JointResult coordinate_joint_recursive(const EnergyNetwork& network, const Vector& p_d,
                                       const RecursiveOptions& options = {});

/// Outer multiplier dynamics with an inner ratio consensus for the coupling
/// term at every evaluation. Throws NumericalError if the outer loop, or an
/// unbudgeted inner loop, fails to converge.
JointResult coordinate_joint_twoscale(const EnergyNetwork& network, const Vector& p_d,
                                      const TwoScaleOptions& options = {});

struct JointKktResiduals {
  double global_balance = 0.0;
  double flow_stationarity = 0.0;
  double node_balance = 0.0;
  double antisymmetry = 0.0;
  double generation_stationarity = 0.0;  ///< max |2 xi p + zeta + lambda + lambda_v|

  double max() const;
};

JointKktResiduals joint_kkt_residuals(const EnergyNetwork& network, const JointResult& result, const Vector& p_d);

}  // namespace energynet
