#include "energynet/oracle.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "energynet/errors.hpp"

namespace energynet {

namespace {

/// Solves [[M, 1], [1^T, 0]] [x; mu] = [rhs; 0].
Vector solve_gauge_fixed(const Matrix& m, const Vector& rhs) {
  const auto n = m.rows();
  Matrix bordered = Matrix::Zero(n + 1, n + 1);
  bordered.topLeftCorner(n, n) = m;
  bordered.topRightCorner(n, 1).setOnes();
  bordered.bottomLeftCorner(1, n).setOnes();
  Vector full = Vector::Zero(n + 1);
  full.head(n) = rhs;
  const Eigen::FullPivLU<Matrix> lu(bordered);
  if (!lu.isInvertible()) throw NumericalError("singular vertex system beyond the gauge direction");
  return lu.solve(full).head(n);
}

RunStats direct_stats() {
  RunStats stats;
  stats.converged = true;
  return stats;
}

}  // namespace

KktSolution solve_equality_qp(const EqualityQp& qp, double rank_tol) {
  const auto nx = qp.hessian.rows();
  const auto rows = qp.constraints.rows();

  std::vector<int> kept;
  std::vector<Vector> basis;
  KktSolution out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector a = qp.constraints.row(r).transpose();
    Vector v = a;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) v -= q.dot(v) * q;
    }
    const double norm = v.norm();
    if (norm <= rank_tol * std::max(1.0, a.norm())) {
      out.dropped.push_back(static_cast<int>(r));
      continue;
    }
    basis.push_back(v / norm);
    kept.push_back(static_cast<int>(r));
  }

  const auto k = static_cast<Eigen::Index>(kept.size());
  Matrix kkt = Matrix::Zero(nx + k, nx + k);
  Vector rhs(nx + k);
  kkt.topLeftCorner(nx, nx) = qp.hessian;
  rhs.head(nx) = -qp.linear;
  for (Eigen::Index r = 0; r < k; ++r) {
    kkt.block(nx + r, 0, 1, nx) = qp.constraints.row(kept[r]);
    kkt.block(0, nx + r, nx, 1) = qp.constraints.row(kept[r]).transpose();
    rhs(nx + r) = qp.rhs(kept[r]);
  }
  const Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) throw NumericalError("saddle-point system is singular");
  const Vector sol = lu.solve(rhs);

  out.primal = sol.head(nx);
  out.multipliers = Vector::Zero(rows);
  for (Eigen::Index r = 0; r < k; ++r) out.multipliers(kept[r]) = sol(nx + r);
  for (int r : out.dropped) {
    const double gap = qp.constraints.row(r).dot(out.primal) - qp.rhs(r);
    if (std::abs(gap) > 1e-8 * (1.0 + std::abs(qp.rhs(r)))) {
      std::ostringstream msg;
      msg << "constraint row " << r << " is dependent but inconsistent (gap " << gap << ")";
      throw NumericalError(msg.str());
    }
  }
  return out;
}

GenerationResult solve_generation_centralized(const EnergyNetwork& network, const Vector& p_d) {
  require_valid(network, p_d);
  const double lambda = closed_form_lambda(network, p_d);
  GenerationResult out;
  out.lambda_star = lambda;
  out.lambda_per_node = Vector::Constant(network.node_count(), lambda);
  out.p_g = generation_from_lambda(network, out.lambda_per_node);
  out.numerator = direct_stats();
  out.denominator = direct_stats();
  return out;
}

FlowResult solve_flow_centralized(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d,
                                  double balance_tol) {
  require_valid(network, p_d);
  if (p_g.size() != p_d.size()) throw ValidationError("generation and desired vectors differ in length");
  require_balanced(p_g, p_d, balance_tol);
  const Matrix lap = weighted_laplacian(network.graph, network.flow_weights());
  FlowResult out;
  out.lambda_v = solve_gauge_fixed(lap, flow_forcing(network, p_g, p_d));
  out.lambda_e = edge_multipliers(network.graph, out.lambda_v);
  out.flows = flow_rule(network, out.lambda_v);
  out.stats = direct_stats();
  return out;
}

JointResult solve_joint_centralized(const EnergyNetwork& network, const Vector& p_d) {
  require_valid(network, p_d);
  JointResult out;
  out.algorithm = JointAlgorithm::Oracle;
  out.lambda_v = solve_gauge_fixed(joint_system_matrix(network), joint_forcing(network, p_d));
  out.lambda = joint_lambda(network, p_d, out.lambda_v);
  out.lambda_per_node = Vector::Constant(network.node_count(), out.lambda);
  out.lambda_e = edge_multipliers(network.graph, out.lambda_v);
  out.p_g = joint_generation(network, out.lambda_per_node, out.lambda_v);
  out.flows = flow_rule(network, out.lambda_v);
  out.converged = true;
  return out;
}

namespace {

struct DirectedLayout {
  int offset = 0;  ///< index of the first flow variable
  // Edge e owns variables offset + 2e (into first from second) and
  // offset + 2e + 1 (into second from first).
  int into_first(int e) const { return offset + 2 * e; }
  int into_second(int e) const { return offset + 2 * e + 1; }
};

/// Adds the directed flow objective, antisymmetry rows and node rows.
/// Returns the row index of the first node row.
int add_flow_block(const EnergyNetwork& network, const DirectedLayout& layout, EqualityQp& qp, int row) {
  const Graph& g = network.graph;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.edges()[e];
    const EdgeCost forward = network.edge_cost(i, j);
    const EdgeCost backward = network.edge_cost(j, i);
    qp.hessian(layout.into_first(e), layout.into_first(e)) = 2.0 * forward.alpha;
    qp.hessian(layout.into_second(e), layout.into_second(e)) = 2.0 * backward.alpha;
    qp.linear(layout.into_first(e)) = forward.beta;
    qp.linear(layout.into_second(e)) = backward.beta;
    qp.constraints(row, layout.into_first(e)) = 1.0;
    qp.constraints(row, layout.into_second(e)) = 1.0;
    ++row;
  }
  const int node_rows = row;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.edges()[e];
    qp.constraints(node_rows + i, layout.into_first(e)) = 1.0;
    qp.constraints(node_rows + j, layout.into_second(e)) = 1.0;
  }
  return node_rows;
}

FlowMap extract_flows(const Graph& graph, const DirectedLayout& layout, const Vector& x) {
  FlowMap flows(graph);
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto [i, j] = graph.edges()[e];
    flows.set(i, j, 0.5 * (x(layout.into_first(e)) - x(layout.into_second(e))));
  }
  return flows;
}

EqualityQp empty_qp(int vars, int rows) {
  return {Matrix::Zero(vars, vars), Vector::Zero(vars), Matrix::Zero(rows, vars), Vector::Zero(rows)};
}

}  // namespace

QpSolution solve_full_qp(const EnergyNetwork& network, const Vector& p_d, QpMode mode) {
  require_valid(network, p_d);
  const int n = network.node_count();
  const int m = network.graph.edge_count();
  QpSolution out;

  if (mode == QpMode::Joint) {
    EqualityQp qp = empty_qp(n + 2 * m, m + n + 1);
    for (int i = 0; i < n; ++i) {
      qp.hessian(i, i) = 2.0 * network.generation[i].xi;
      qp.linear(i) = network.generation[i].zeta;
    }
    const DirectedLayout layout{n};
    const int node_rows = add_flow_block(network, layout, qp, 0);
    for (int i = 0; i < n; ++i) {
      qp.constraints(node_rows + i, i) = 1.0;
      qp.rhs(node_rows + i) = p_d(i);
      qp.constraints(node_rows + n, i) = 1.0;
    }
    qp.rhs(node_rows + n) = p_d.sum();

    const KktSolution sol = solve_equality_qp(qp);
    out.p_g = sol.primal.head(n);
    out.flows = extract_flows(network.graph, layout, sol.primal);
    out.lambda_e = sol.multipliers.head(m);
    out.lambda_v = sol.multipliers.segment(node_rows, n);
    out.lambda = sol.multipliers(node_rows + n);
    out.dropped_rows = static_cast<int>(sol.dropped.size());

    const double shift = out.lambda_v.mean();
    out.lambda_v.array() -= shift;
    out.lambda_e.array() += shift;
    out.lambda += shift;
    return out;
  }

  EqualityQp gen = empty_qp(n, 1);
  for (int i = 0; i < n; ++i) {
    gen.hessian(i, i) = 2.0 * network.generation[i].xi;
    gen.linear(i) = network.generation[i].zeta;
    gen.constraints(0, i) = 1.0;
  }
  gen.rhs(0) = p_d.sum();
  const KktSolution gen_sol = solve_equality_qp(gen);
  out.p_g = gen_sol.primal;
  out.lambda = gen_sol.multipliers(0);
  out.dropped_rows = static_cast<int>(gen_sol.dropped.size());

  out.flows = FlowMap(network.graph);
  out.lambda_v = Vector::Zero(n);
  out.lambda_e = Vector::Zero(m);
  if (m == 0) return out;

  EqualityQp flow = empty_qp(2 * m, m + n);
  const DirectedLayout layout{0};
  const int node_rows = add_flow_block(network, layout, flow, 0);
  for (int i = 0; i < n; ++i) flow.rhs(node_rows + i) = p_d(i) - out.p_g(i);
  const KktSolution flow_sol = solve_equality_qp(flow);
  out.flows = extract_flows(network.graph, layout, flow_sol.primal);
  out.lambda_e = flow_sol.multipliers.head(m);
  out.lambda_v = flow_sol.multipliers.segment(node_rows, n);
  out.dropped_rows += static_cast<int>(flow_sol.dropped.size());

  const double shift = out.lambda_v.mean();
  out.lambda_v.array() -= shift;
  out.lambda_e.array() += shift;
  return out;
}

}  // namespace energynet
