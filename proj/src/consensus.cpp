#include "energynet/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet {

namespace {

constexpr double kOverflowGuard = 1e150;
constexpr double kDegenerateDenominator = 1e-12;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

double rk4_step(double rate_bound, double requested) {
  if (rate_bound <= 0.0) return requested > 0.0 ? requested : 1.0;
  const double limit = kRk4StabilityLimit / rate_bound;
  if (requested <= 0.0) return 2.0 / rate_bound;
  return std::min(requested, limit);
}

ConsensusRun integrate_field(const VectorField& field, const Vector& x0, double rate_bound,
                             const ConsensusOptions& options) {
  if (!(options.tol > 0.0)) throw ValidationError("consensus tolerance must be positive");
  if (!(options.t_max > 0.0)) throw ValidationError("t_max must be positive");
  if (options.dt < 0.0) throw ValidationError("dt must be nonnegative");

  ConsensusRun run;
  run.state = x0;
  const double dt = rk4_step(rate_bound, options.dt);
  run.stats.dt = dt;
  const int stride = std::max(1, options.trace_stride);

  Vector k1 = field(run.state);
  run.stats.residual = inf_norm(k1);
  if (options.record_trace) run.trace.push_back({0.0, run.state});

  while (true) {
    if (run.stats.residual <= options.tol) {
      run.stats.converged = true;
      break;
    }
    if (run.stats.elapsed >= options.t_max) break;
    if (options.max_steps && run.stats.steps >= *options.max_steps) break;

    const Vector k2 = field(run.state + 0.5 * dt * k1);
    const Vector k3 = field(run.state + 0.5 * dt * k2);
    const Vector k4 = field(run.state + dt * k3);
    run.state += (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
    ++run.stats.steps;
    run.stats.elapsed = static_cast<double>(run.stats.steps) * dt;

    const double size = inf_norm(run.state);
    if (!std::isfinite(size) || size > kOverflowGuard) {
      std::ostringstream msg;
      msg << "unstable system: state norm " << size << " at t=" << run.stats.elapsed;
      throw NumericalError(msg.str());
    }

    k1 = field(run.state);
    run.stats.residual = inf_norm(k1);
    if (options.record_trace && run.stats.steps % stride == 0) {
      run.trace.push_back({run.stats.elapsed, run.state});
    }
  }
  if (options.record_trace && (run.trace.empty() || run.trace.back().t != run.stats.elapsed)) {
    run.trace.push_back({run.stats.elapsed, run.state});
  }
  return run;
}

ConsensusRun integrate(const LinearFlowProblem& problem) {
  const auto n = problem.system.rows();
  if (problem.system.cols() != n || problem.forcing.size() != n || problem.initial.size() != n) {
    throw ValidationError("linear flow problem has inconsistent dimensions");
  }
  const Matrix& m = problem.system;
  const Vector& b = problem.forcing;
  return integrate_field([&](const Vector& x) -> Vector { return b - m * x; }, problem.initial,
                         spectral_radius_bound(m), problem.options);
}

double disagreement_tolerance(double tol, double algebraic_connectivity) {
  // A single node has nothing to agree on.
  if (!(algebraic_connectivity > 0.0)) return tol;
  return tol * std::min(1.0, algebraic_connectivity);
}

ConsensusRun average_consensus(const Graph& graph, const Vector& x0, const ConsensusOptions& options) {
  if (!is_connected(graph)) throw PreconditionError("average consensus needs a connected graph");
  if (x0.size() != graph.node_count()) throw ValidationError("initial state does not match node count");
  LinearFlowProblem problem{laplacian(graph), Vector::Zero(graph.node_count()), x0, options};
  problem.options.tol = disagreement_tolerance(options.tol, algebraic_connectivity(problem.system));
  return integrate(problem);
}

RatioConsensus ratio_consensus(const Graph& graph, const Vector& u0, const Vector& v0,
                               const ConsensusOptions& options) {
  RatioConsensus out;
  out.numerator = average_consensus(graph, u0, options);
  out.denominator = average_consensus(graph, v0, options);
  const Vector& u = out.numerator.state;
  const Vector& v = out.denominator.state;
  if (v.cwiseAbs().minCoeff() < kDegenerateDenominator) {
    throw NumericalError("degenerate denominator in ratio consensus");
  }
  out.per_node = -u.cwiseQuotient(v);
  out.value = out.per_node.mean();
  return out;
}

}  // namespace energynet
