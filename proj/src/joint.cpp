#include "energynet/joint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "energynet/errors.hpp"
#include "energynet/generation.hpp"

namespace energynet {

namespace {

constexpr double kDivergenceFactor = 1e12;

std::vector<double> xi_values(const EnergyNetwork& network) {
  std::vector<double> xi;
  for (const auto& c : network.generation) xi.push_back(c.xi);
  return xi;
}

/// Average consensus on a fixed graph with the Laplacian and its stopping
/// tolerance computed once, for repeated use inside the outer loop.
class InnerConsensus {
 public:
  InnerConsensus(const Graph& graph, double tol, std::optional<long> budget) : lap_(laplacian(graph)) {
    options_.tol = disagreement_tolerance(tol, algebraic_connectivity(lap_));
    options_.t_max = 1e12;
    options_.max_steps = budget;
    rate_ = spectral_radius_bound(lap_);
  }

  ConsensusRun run(const Vector& x0) const {
    return integrate_field([&](const Vector& x) -> Vector { return -(lap_ * x); }, x0, rate_, options_);
  }

 private:
  Matrix lap_;
  ConsensusOptions options_;
  double rate_ = 0.0;
};

}  // namespace

double recursion_rate_bound(const EnergyNetwork& network) {
  const int n = network.node_count();
  if (n < 2) return 0.0;
  // One recursion maps p through -P D L^+ with D = diag(1/(2 xi)) and
  // P = I - D 1 1^T / (1^T D 1). With u = D^{1/2} 1 / |D^{1/2} 1| this is
  // similar to -Pi D^{1/2} L^+ D^{1/2} Pi, Pi = I - u u^T, which is symmetric.
  const Matrix lap = weighted_laplacian(network.graph, network.flow_weights());
  const Matrix ones = Matrix::Constant(n, n, 1.0 / n);
  const Matrix pinv = (lap + ones).inverse() - ones;
  Vector root(n);
  for (int i = 0; i < n; ++i) root(i) = std::sqrt(0.5 / network.generation[i].xi);
  const Vector u = root.normalized();
  const Matrix pi = Matrix::Identity(n, n) - u * u.transpose();
  const Matrix m = pi * root.asDiagonal() * pinv * root.asDiagonal() * pi;
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double resolve_relaxation(const EnergyNetwork& network, double requested) {
  if (!(requested >= 0.0 && requested <= 1.0)) throw ValidationError("relaxation must lie in [0, 1]");
  if (requested > 0.0) return requested;
  return 2.0 / (2.0 + recursion_rate_bound(network));
}

std::string_view to_string(JointAlgorithm algorithm) {
  switch (algorithm) {
    case JointAlgorithm::Recursive:
      return "recursive";
    case JointAlgorithm::TwoScale:
      return "twoscale";
    case JointAlgorithm::Oracle:
      return "oracle";
  }
  return "unknown";
}

void TwoScaleOptions::validate() const {
  std::vector<std::string> violations;
  if (!(inner_tol > 0.0)) violations.push_back("inner tolerance must be positive");
  if (!(outer_tol > 0.0)) violations.push_back("outer tolerance must be positive");
  if (!(inner_tol < outer_tol)) violations.push_back("inner tolerance must be strictly tighter than outer tolerance");
  if (!(t_max > 0.0)) violations.push_back("t_max must be positive");
  if (dt < 0.0) violations.push_back("dt must be nonnegative");
  if (inner_budget && *inner_budget < 1) violations.push_back("inner budget must be at least one step");
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

Vector joint_forcing(const EnergyNetwork& network, const Vector& p_d) {
  const int n = network.node_count();
  double shared = 0.0;
  double inv_xi_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto& c = network.generation[j];
    shared += c.zeta / (2.0 * c.xi) + p_d(j);
    inv_xi_sum += 1.0 / c.xi;
  }
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    double beta_term = 0.0;
    for (const auto& inc : network.graph.incident(i)) {
      const EdgeCost e = network.edge_cost(i, inc.neighbor);
      beta_term += e.beta / (2.0 * e.alpha);
    }
    w(i) = -beta_term - c.zeta / (2.0 * c.xi) - p_d(i) + shared / (c.xi * inv_xi_sum);
  }
  return w;
}

Matrix joint_system_matrix(const EnergyNetwork& network) {
  const auto xi = xi_values(network);
  return weighted_laplacian(network.graph, network.flow_weights()) + complete_graph_laplacian(xi);
}

double joint_lambda(const EnergyNetwork& network, const Vector& p_d, const Vector& lambda_v) {
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < network.node_count(); ++i) {
    const auto& c = network.generation[i];
    num += c.zeta / (2.0 * c.xi) + lambda_v(i) / (2.0 * c.xi) + p_d(i);
    den += 1.0 / (2.0 * c.xi);
  }
  return -num / den;
}

Vector joint_generation(const EnergyNetwork& network, const Vector& lambda_per_node, const Vector& lambda_v) {
  Vector p(network.node_count());
  for (int i = 0; i < network.node_count(); ++i) {
    const auto& c = network.generation[i];
    p(i) = -(c.zeta + lambda_per_node(i) + lambda_v(i)) / (2.0 * c.xi);
  }
  return p;
}

namespace {

/// Distributed lambda for given vertex multipliers: ratio consensus over
/// r(0) = 1/(2 xi) and s(0) = zeta/(2 xi) + lambda_v/(2 xi) + p_d.
RatioConsensus distributed_joint_lambda(const EnergyNetwork& network, const Vector& p_d, const Vector& lambda_v,
                                        const ConsensusOptions& options) {
  const int n = network.node_count();
  Vector r0(n);
  Vector s0(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    r0(i) = 1.0 / (2.0 * c.xi);
    s0(i) = c.zeta / (2.0 * c.xi) + lambda_v(i) / (2.0 * c.xi) + p_d(i);
  }
  return ratio_consensus(network.graph, s0, r0, options);
}

}  // namespace

JointResult coordinate_joint_recursive(const EnergyNetwork& network, const Vector& p_d,
                                       const RecursiveOptions& options) {
  require_valid(network, p_d);
  const int n = network.node_count();
  if (options.max_iter < 1) throw ValidationError("max_iter must be at least 1");
  const double relaxation = resolve_relaxation(network, options.relaxation);
  std::vector<double> epsilon = options.epsilon;
  if (epsilon.empty()) epsilon.assign(n, 1e-6);
  if (static_cast<int>(epsilon.size()) != n) throw ValidationError("epsilon must have one entry per node");

  const FlowOptions flow_options{options.consensus, options.balance_tol};
  const GenerationResult initial = coordinate_generation(network, p_d, {options.consensus, options.balance_tol});

  JointResult out;
  out.algorithm = JointAlgorithm::Recursive;
  Vector p = initial.p_g;
  out.history.push_back(p);
  const double blowup = kDivergenceFactor * (1.0 + p_d.cwiseAbs().maxCoeff());

  double last_step = INFINITY;
  for (int k = 1; k <= options.max_iter; ++k) {
    Vector update;
    try {
      const FlowResult flow = coordinate_flow(network, p, p_d, flow_options);
      const RatioConsensus lambda = distributed_joint_lambda(network, p_d, flow.lambda_v, options.consensus);
      update = joint_generation(network, lambda.per_node, flow.lambda_v);
    } catch (const NumericalError&) {
      // A growing oscillation eventually outruns the stage tolerances.
      if (k > 2 && out.residual > last_step) {
        out.diverged = true;
        break;
      }
      throw;
    }
    const Vector next = (1.0 - relaxation) * p + relaxation * update;
    out.history.push_back(next);
    out.iterations = k;

    const Vector step = (next - p).cwiseAbs();
    last_step = out.residual;
    out.residual = step.maxCoeff();
    p = next;
    bool done = true;
    for (int i = 0; i < n; ++i) done = done && step(i) <= epsilon[i];
    if (done) {
      out.converged = true;
      break;
    }
    if (!std::isfinite(p.cwiseAbs().maxCoeff()) || p.cwiseAbs().maxCoeff() > blowup) {
      out.diverged = true;
      break;
    }
  }

  // Final flow stage so the reported flows deliver exactly the reported p_g.
  if (!out.diverged) {
    const FlowResult flow = coordinate_flow(network, p, p_d, flow_options);
    const RatioConsensus lambda = distributed_joint_lambda(network, p_d, flow.lambda_v, options.consensus);
    out.lambda_v = flow.lambda_v;
    out.lambda_e = flow.lambda_e;
    out.flows = flow.flows;
    out.lambda_per_node = lambda.per_node;
    out.lambda = lambda.value;
  } else {
    out.lambda_v = Vector::Zero(n);
    out.lambda_e = Vector::Zero(network.graph.edge_count());
    out.flows = FlowMap(network.graph);
    out.lambda_per_node = Vector::Zero(n);
  }
  out.p_g = p;
  return out;
}

JointResult coordinate_joint_twoscale(const EnergyNetwork& network, const Vector& p_d,
                                      const TwoScaleOptions& options) {
  require_valid(network, p_d);
  options.validate();
  const int n = network.node_count();
  const Matrix flow_lap = weighted_laplacian(network.graph, network.flow_weights());
  const double rate = spectral_radius_bound(joint_system_matrix(network));
  const InnerConsensus inner(network.graph, options.inner_tol, options.inner_budget);

  Vector xi(n);
  Vector constant(n);  // -sum beta/(2 alpha) - zeta/(2 xi) - p_d
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    xi(i) = c.xi;
    double beta_term = 0.0;
    for (const auto& inc : network.graph.incident(i)) {
      const EdgeCost e = network.edge_cost(i, inc.neighbor);
      beta_term += e.beta / (2.0 * e.alpha);
    }
    constant(i) = -beta_term - c.zeta / (2.0 * c.xi) - p_d(i);
  }

  // r does not depend on the outer state, so it is agreed on once.
  const ConsensusRun r_run = inner.run(xi.cwiseInverse());
  if (!r_run.stats.converged && !options.inner_budget) {
    throw NumericalError("inner consensus on 1/xi did not converge");
  }
  const Vector r_star = r_run.state;
  Vector s_offset(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    s_offset(i) = c.zeta / (2.0 * c.xi) + p_d(i);
  }

  const auto field = [&](const Vector& lambda_v) -> Vector {
    const Vector s0 = s_offset + lambda_v.cwiseQuotient(2.0 * xi);
    const ConsensusRun s_run = inner.run(s0);
    if (!s_run.stats.converged && !options.inner_budget) {
      std::ostringstream msg;
      msg << "inner consensus did not converge: residual " << s_run.stats.residual;
      throw NumericalError(msg.str());
    }
    const Vector phi = s_run.state.cwiseQuotient(xi.cwiseProduct(r_star));
    return -(flow_lap * lambda_v) + constant + phi - lambda_v.cwiseQuotient(2.0 * xi);
  };

  ConsensusOptions outer;
  outer.dt = options.dt;
  outer.tol = options.outer_tol;
  outer.t_max = options.t_max;
  outer.trace_stride = options.trace_stride;
  outer.record_trace = options.record_trace;
  ConsensusRun run = integrate_field(field, Vector::Zero(n), rate, outer);
  if (!run.stats.converged) {
    std::ostringstream msg;
    msg << "joint multipliers did not converge: residual " << run.stats.residual << " after t=" << run.stats.elapsed;
    throw NumericalError(msg.str());
  }

  ConsensusOptions final_consensus;
  final_consensus.tol = options.inner_tol;
  final_consensus.t_max = 1e12;
  const RatioConsensus lambda = distributed_joint_lambda(network, p_d, run.state, final_consensus);

  JointResult out;
  out.algorithm = JointAlgorithm::TwoScale;
  out.lambda_v = std::move(run.state);
  out.lambda_e = edge_multipliers(network.graph, out.lambda_v);
  out.lambda_per_node = lambda.per_node;
  out.lambda = lambda.value;
  out.p_g = joint_generation(network, lambda.per_node, out.lambda_v);
  out.flows = flow_rule(network, out.lambda_v);
  out.converged = true;
  out.iterations = run.stats.steps;
  out.elapsed = run.stats.elapsed;
  out.residual = run.stats.residual;
  out.trace = std::move(run.trace);
  return out;
}

double JointKktResiduals::max() const {
  return std::max({global_balance, flow_stationarity, node_balance, antisymmetry, generation_stationarity});
}

JointKktResiduals joint_kkt_residuals(const EnergyNetwork& network, const JointResult& result, const Vector& p_d) {
  JointKktResiduals r;
  r.global_balance = std::abs(result.p_g.sum() - p_d.sum());
  const FlowKktResiduals flow =
      flow_residuals(network, result.lambda_v, result.lambda_e, result.flows, result.p_g, p_d);
  r.flow_stationarity = flow.stationarity;
  r.node_balance = flow.node_balance;
  r.antisymmetry = flow.antisymmetry;
  for (int i = 0; i < network.node_count(); ++i) {
    const auto& c = network.generation[i];
    const double s = 2.0 * c.xi * result.p_g(i) + c.zeta + result.lambda + result.lambda_v(i);
    r.generation_stationarity = std::max(r.generation_stationarity, std::abs(s));
  }
  return r;
}

}  // namespace energynet
