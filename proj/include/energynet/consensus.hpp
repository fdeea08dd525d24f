#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "energynet/graph.hpp"

namespace energynet {

/// Numeric controls shared by every integration.
struct ConsensusOptions {
  double dt = 0.0;           ///< 0 selects the step from the stability bound
  double tol = 1e-9;         ///< stop when ||dx/dt||_inf <= tol
  double t_max = 1e4;        ///< simulated-time budget
  int trace_stride = 10;     ///< keep every k-th state when tracing
  bool record_trace = false;
  std::optional<long> max_steps;  ///< optional hard step budget
};

/// dx/dt = -M x + b from x(0) = x0.
struct LinearFlowProblem {
  Matrix system;
  Vector forcing;
  Vector initial;
  ConsensusOptions options;
};

struct TraceSample {
  double t = 0.0;
  Vector state;
};

struct RunStats {
  bool converged = false;
  double elapsed = 0.0;   ///< simulated time
  double residual = 0.0;  ///< ||dx/dt||_inf at termination
  long steps = 0;
  double dt = 0.0;
};

struct ConsensusRun {
  Vector state;
  RunStats stats;
  std::vector<TraceSample> trace;
};

using VectorField = std::function<Vector(const Vector&)>;

/// Largest RK4 step accepted for a given spectral radius: dt * rho <= 2.5.
inline constexpr double kRk4StabilityLimit = 2.5;

/// Step actually used: the requested one (or 2/rho when none is requested),
/// shrunk to the RK4 stability limit.
double rk4_step(double rate_bound, double requested);

/// Fixed-step classical RK4 on an arbitrary field. `rate_bound` is an upper
/// bound on the spectral radius of the field's Jacobian and sets the step.
/// Throws NumericalError("unstable system") if the state overflows.
ConsensusRun integrate_field(const VectorField& field, const Vector& x0, double rate_bound,
                             const ConsensusOptions& options);

ConsensusRun integrate(const LinearFlowProblem& problem);

/// Residual tolerance that bounds the disagreement ||x - mean|| by
/// tol * sqrt(n), given the graph's algebraic connectivity.
double disagreement_tolerance(double tol, double algebraic_connectivity);

/// dx_i/dt = sum_{j in N_i} (x_j - x_i). Throws PreconditionError if the
/// graph is disconnected.
ConsensusRun average_consensus(const Graph& graph, const Vector& x0, const ConsensusOptions& options);

struct RatioConsensus {
  double value = 0.0;  ///< mean of the per-node estimates
  Vector per_node;     ///< -u_i* / v_i* as seen by each node
  ConsensusRun numerator;
  ConsensusRun denominator;
};

/// -u*/v* from two average consensus runs. Throws NumericalError if the
/// consensus value of v is below 1e-12 in magnitude.
RatioConsensus ratio_consensus(const Graph& graph, const Vector& u0, const Vector& v0,
                               const ConsensusOptions& options);

}  // namespace energynet
