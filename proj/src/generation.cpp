#include "energynet/generation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet {

double closed_form_lambda(const EnergyNetwork& network, const Vector& p_d) {
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < network.node_count(); ++i) {
    const auto& c = network.generation[i];
    num += p_d(i) + c.zeta / (2.0 * c.xi);
    den += 1.0 / (2.0 * c.xi);
  }
  return -num / den;
}

Vector generation_from_lambda(const EnergyNetwork& network, const Vector& lambda_per_node) {
  Vector p(network.node_count());
  for (int i = 0; i < network.node_count(); ++i) {
    const auto& c = network.generation[i];
    p(i) = -(lambda_per_node(i) + c.zeta) / (2.0 * c.xi);
  }
  return p;
}

GenerationResult coordinate_generation(const EnergyNetwork& network, const Vector& p_d,
                                       const GenerationOptions& options) {
  require_valid(network, p_d);
  const int n = network.node_count();
  Vector u0(n);
  Vector v0(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    v0(i) = 1.0 / (2.0 * c.xi);
    u0(i) = p_d(i) + c.zeta / (2.0 * c.xi);
  }

  const RatioConsensus ratio = ratio_consensus(network.graph, u0, v0, options.consensus);
  if (!ratio.numerator.stats.converged || !ratio.denominator.stats.converged) {
    std::ostringstream msg;
    msg << "generation consensus did not converge (residuals " << ratio.numerator.stats.residual << ", "
        << ratio.denominator.stats.residual << ")";
    throw NumericalError(msg.str());
  }

  GenerationResult out;
  out.lambda_per_node = ratio.per_node;
  out.lambda_star = ratio.value;
  out.p_g = generation_from_lambda(network, ratio.per_node);
  out.numerator = ratio.numerator.stats;
  out.denominator = ratio.denominator.stats;
  out.numerator_trace = ratio.numerator.trace;
  out.denominator_trace = ratio.denominator.trace;
  return out;
}

BoundsReport check_generation_bounds(const EnergyNetwork& network, const Vector& p_d,
                                     const GenerationResult& result, std::span<const GenerationBounds> bounds,
                                     const ConsensusOptions& options) {
  const int n = network.node_count();
  BoundsReport report;
  report.total_demand = p_d.sum();

  const Vector xi = network.xi();
  const Vector zeta = network.zeta();
  report.uniform_zeta = n == 0 || (zeta.array() == zeta(0)).all();

  Vector x0 = p_d;
  Vector y0(n);
  Vector z0(n);
  for (int i = 0; i < n; ++i) {
    y0(i) = 1.0 / (2.0 * xi(i));
    z0(i) = zeta(i) / (2.0 * xi(i));
  }
  const Vector x = average_consensus(network.graph, x0, options).state;
  const Vector y = average_consensus(network.graph, y0, options).state;
  const Vector z = average_consensus(network.graph, z0, options).state;

  report.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    NodeBoundsCheck& node = report.nodes[i];
    if (static_cast<int>(bounds.size()) > i) {
      node.lower = bounds[i].lower;
      node.upper = bounds[i].upper;
    }
    node.p_g = result.p_g(i);
    node.probe = (x(i) / y(i) + z(i) / y(i) - zeta(i)) / (2.0 * xi(i));

    const auto inside = [&](double v) {
      return (!node.lower || v >= *node.lower) && (!node.upper || v <= *node.upper);
    };
    node.feasible = inside(node.p_g);
    node.probe_feasible = inside(node.probe);

    if (report.uniform_zeta) {
      const double ratio_sum = (xi(i) / xi.array()).sum();
      node.xi_ratio_sum = ratio_sum;
      // p_g = p^D / ratio_sum with ratio_sum > 0, so the two-sided test is
      // evaluated multiplied through to avoid dividing by a zero bound.
      const bool upper_ok = !node.upper || report.total_demand <= *node.upper * ratio_sum;
      const bool lower_ok = !node.lower || *node.lower * ratio_sum <= report.total_demand;
      node.sufficient_condition = upper_ok && lower_ok;
    }
    report.all_feasible = report.all_feasible && node.feasible;
  }
  return report;
}

}  // namespace energynet
