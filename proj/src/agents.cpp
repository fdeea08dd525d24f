#include "energynet/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet::message {

namespace {

constexpr double kOverflowGuard = 1e150;

double consensus_rate(int, double own, std::span<const Message> inbox) {
  double rate = 0.0;
  for (const Message& m : inbox) rate += m.weight * (m.value - own);
  return rate;
}

RoundOptions round_options(const MessageOptions& options, double tol) {
  RoundOptions out;
  out.tol = tol;
  out.t_max = options.consensus.t_max;
  out.schedule = options.schedule;
  out.seed = options.seed;
  out.trace_stride = options.consensus.trace_stride;
  out.record_trace = options.consensus.record_trace;
  return out;
}

std::vector<double> flow_weight_list(const EnergyNetwork& network) {
  std::vector<double> w;
  for (const auto& c : network.flow) w.push_back(1.0 / (4.0 * c.alpha));
  return w;
}

/// Unit-weight averaging among neighbors, with the stop tolerance tightened
/// by the algebraic connectivity as in matrix mode.
class Averager {
 public:
  Averager(const Graph& graph, const MessageOptions& options, double tol)
      : net_(graph, {}, options.schedule, options.seed), options_(round_options(options, tol)) {
    const Matrix lap = laplacian(graph);
    dt_ = euler_step(spectral_radius_bound(lap));
    options_.tol = disagreement_tolerance(tol, algebraic_connectivity(lap));
    options_.t_max = std::max(options_.t_max, 1e12 * dt_);
    options_.record_trace = false;
  }

  void set_budget(std::optional<long> budget) { options_.max_rounds = budget; }

  ConsensusRun run(const Vector& x0) const { return net_.run(x0, consensus_rate, dt_, options_); }

 private:
  AgentNetwork net_;
  RoundOptions options_;
  double dt_ = 1.0;
};

struct Ratio {
  Vector per_node;
  double value = 0.0;
  RunStats numerator;
  RunStats denominator;
};

Ratio ratio(const Averager& averager, const Vector& u0, const Vector& v0) {
  const ConsensusRun u = averager.run(u0);
  const ConsensusRun v = averager.run(v0);
  if (!u.stats.converged || !v.stats.converged) throw NumericalError("ratio consensus did not converge");
  if (v.state.cwiseAbs().minCoeff() < 1e-12) throw NumericalError("degenerate denominator in ratio consensus");
  Ratio out;
  out.per_node = -u.state.cwiseQuotient(v.state);
  out.value = out.per_node.mean();
  out.numerator = u.stats;
  out.denominator = v.stats;
  return out;
}

Ratio joint_lambda_rounds(const EnergyNetwork& network, const Vector& p_d, const Vector& lambda_v,
                          const Averager& averager) {
  const int n = network.node_count();
  Vector s0(n);
  Vector r0(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    r0(i) = 1.0 / (2.0 * c.xi);
    s0(i) = c.zeta / (2.0 * c.xi) + lambda_v(i) / (2.0 * c.xi) + p_d(i);
  }
  return ratio(averager, s0, r0);
}

}  // namespace

double euler_step(double rate_bound) { return rate_bound > 0.0 ? 1.0 / rate_bound : 1.0; }

AgentNetwork::AgentNetwork(const Graph& graph, std::span<const double> weights, Schedule schedule,
                           std::uint64_t seed) {
  const int n = graph.node_count();
  links_.resize(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& inc : graph.incident(i)) {
      const double w = weights.empty() ? 1.0 : weights[inc.edge];
      links_[i].emplace_back(inc.neighbor, w);
    }
    std::sort(links_[i].begin(), links_[i].end());
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  if (schedule == Schedule::Reversed) std::reverse(order_.begin(), order_.end());
  if (schedule == Schedule::Shuffled) {
    std::mt19937_64 rng(seed);
    std::shuffle(order_.begin(), order_.end(), rng);
  }
}

Vector AgentNetwork::round(Vector& state, const LocalRate& rate, double dt) const {
  // Publish phase: every agent posts its value; the copy is the barrier.
  const Vector published = state;
  Vector rates = Vector::Zero(size());
  std::vector<Message> inbox;
  for (int i : order_) {
    inbox.clear();
    for (const auto& [j, w] : links_[i]) inbox.push_back({j, published(j), w});
    rates(i) = rate(i, published(i), inbox);
    state(i) = published(i) + dt * rates(i);
  }
  return rates;
}

ConsensusRun AgentNetwork::run(const Vector& x0, const LocalRate& rate, double dt, const RoundOptions& options) const {
  if (!(options.tol > 0.0)) throw ValidationError("consensus tolerance must be positive");
  ConsensusRun out;
  out.state = x0;
  out.stats.dt = dt;
  const long cap = std::max(1L, static_cast<long>(std::ceil(options.t_max / dt)));
  const int stride = std::max(1, options.trace_stride);
  if (options.record_trace) out.trace.push_back({0.0, out.state});
  while (true) {
    if (out.stats.steps >= cap) break;
    if (options.max_rounds && out.stats.steps >= *options.max_rounds) break;
    const Vector rates = round(out.state, rate, dt);
    ++out.stats.steps;
    out.stats.elapsed = static_cast<double>(out.stats.steps) * dt;
    out.stats.residual = rates.size() == 0 ? 0.0 : rates.cwiseAbs().maxCoeff();
    const double size = out.state.size() == 0 ? 0.0 : out.state.cwiseAbs().maxCoeff();
    if (!std::isfinite(size) || size > kOverflowGuard) {
      std::ostringstream msg;
      msg << "unstable system: state norm " << size << " after round " << out.stats.steps;
      throw NumericalError(msg.str());
    }
    if (options.record_trace && out.stats.steps % stride == 0) out.trace.push_back({out.stats.elapsed, out.state});
    if (out.stats.residual <= options.tol) {
      out.stats.converged = true;
      break;
    }
  }
  if (options.record_trace && out.trace.back().t != out.stats.elapsed) {
    out.trace.push_back({out.stats.elapsed, out.state});
  }
  return out;
}

GenerationResult coordinate_generation(const EnergyNetwork& network, const Vector& p_d,
                                       const MessageOptions& options) {
  require_valid(network, p_d);
  const int n = network.node_count();
  Vector u0(n);
  Vector v0(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    v0(i) = 1.0 / (2.0 * c.xi);
    u0(i) = p_d(i) + c.zeta / (2.0 * c.xi);
  }
  const Averager averager(network.graph, options, options.consensus.tol);
  const Ratio r = ratio(averager, u0, v0);

  GenerationResult out;
  out.lambda_per_node = r.per_node;
  out.lambda_star = r.value;
  out.p_g = generation_from_lambda(network, r.per_node);
  out.numerator = r.numerator;
  out.denominator = r.denominator;
  return out;
}

FlowResult coordinate_flow(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d,
                           const MessageOptions& options) {
  require_valid(network, p_d);
  if (p_g.size() != p_d.size()) throw ValidationError("generation and desired vectors differ in length");
  require_balanced(p_g, p_d, options.balance_tol);

  const std::vector<double> weights = flow_weight_list(network);
  const AgentNetwork net(network.graph, weights, options.schedule, options.seed);
  const double dt = euler_step(spectral_radius_bound(weighted_laplacian(network.graph, network.flow_weights())));
  const Vector w = flow_forcing(network, p_g, p_d);
  const LocalRate rate = [&](int i, double own, std::span<const Message> inbox) {
    return consensus_rate(i, own, inbox) + w(i);
  };
  ConsensusRun run = net.run(Vector::Zero(network.node_count()), rate, dt,
                             round_options(options, options.consensus.tol));
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

JointResult coordinate_joint_twoscale(const EnergyNetwork& network, const Vector& p_d,
                                      const TwoScaleOptions& twoscale, const MessageOptions& options) {
  require_valid(network, p_d);
  twoscale.validate();
  const int n = network.node_count();

  Averager inner(network.graph, options, twoscale.inner_tol);
  const std::vector<double> weights = flow_weight_list(network);
  const AgentNetwork outer(network.graph, weights, options.schedule, options.seed);
  const double dt = euler_step(spectral_radius_bound(joint_system_matrix(network)));

  Vector xi(n);
  Vector constant(n);
  Vector s_offset(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = network.generation[i];
    xi(i) = c.xi;
    double beta_term = 0.0;
    for (const auto& inc : network.graph.incident(i)) {
      const EdgeCost e = network.edge_cost(i, inc.neighbor);
      beta_term += e.beta / (2.0 * e.alpha);
    }
    constant(i) = -beta_term - c.zeta / (2.0 * c.xi) - p_d(i);
    s_offset(i) = c.zeta / (2.0 * c.xi) + p_d(i);
  }

  const ConsensusRun r_run = inner.run(xi.cwiseInverse());
  if (!r_run.stats.converged) throw NumericalError("inner consensus on 1/xi did not converge");
  const Vector r_star = r_run.state;
  inner.set_budget(twoscale.inner_budget);

  JointResult out;
  out.algorithm = JointAlgorithm::TwoScale;
  Vector state = Vector::Zero(n);
  Vector phi(n);
  const LocalRate rate = [&](int i, double own, std::span<const Message> inbox) {
    return consensus_rate(i, own, inbox) + constant(i) + phi(i) - own / (2.0 * xi(i));
  };
  const long cap = std::max(1L, static_cast<long>(std::ceil(twoscale.t_max / dt)));
  const int stride = std::max(1, twoscale.trace_stride);
  if (twoscale.record_trace) out.trace.push_back({0.0, state});
  for (long k = 0; k < cap; ++k) {
    const ConsensusRun s_run = inner.run(s_offset + state.cwiseQuotient(2.0 * xi));
    if (!s_run.stats.converged && !twoscale.inner_budget) {
      std::ostringstream msg;
      msg << "inner consensus did not converge: residual " << s_run.stats.residual;
      throw NumericalError(msg.str());
    }
    phi = s_run.state.cwiseQuotient(xi.cwiseProduct(r_star));
    const Vector rates = outer.round(state, rate, dt);
    out.iterations = k + 1;
    out.elapsed = static_cast<double>(out.iterations) * dt;
    out.residual = rates.cwiseAbs().maxCoeff();
    if (!std::isfinite(out.residual)) throw NumericalError("unstable system: outer rates are not finite");
    if (twoscale.record_trace && out.iterations % stride == 0) out.trace.push_back({out.elapsed, state});
    if (out.residual <= twoscale.outer_tol) {
      out.converged = true;
      break;
    }
  }
  if (twoscale.record_trace && out.trace.back().t != out.elapsed) out.trace.push_back({out.elapsed, state});
  if (!out.converged) {
    std::ostringstream msg;
    msg << "joint multipliers did not converge: residual " << out.residual << " after t=" << out.elapsed;
    throw NumericalError(msg.str());
  }

  const Averager final_averager(network.graph, options, twoscale.inner_tol);
  const Ratio lambda = joint_lambda_rounds(network, p_d, state, final_averager);
  out.lambda_v = state;
  out.lambda_e = edge_multipliers(network.graph, out.lambda_v);
  out.lambda_per_node = lambda.per_node;
  out.lambda = lambda.value;
  out.p_g = joint_generation(network, lambda.per_node, out.lambda_v);
  out.flows = flow_rule(network, out.lambda_v);
  return out;
}

JointResult coordinate_joint_recursive(const EnergyNetwork& network, const Vector& p_d,
                                       const RecursiveOptions& recursive, const MessageOptions& options) {
  require_valid(network, p_d);
  const int n = network.node_count();
  if (recursive.max_iter < 1) throw ValidationError("max_iter must be at least 1");
  const double relaxation = resolve_relaxation(network, recursive.relaxation);
  std::vector<double> epsilon = recursive.epsilon;
  if (epsilon.empty()) epsilon.assign(n, 1e-6);
  if (static_cast<int>(epsilon.size()) != n) throw ValidationError("epsilon must have one entry per node");

  MessageOptions stage = options;
  stage.consensus = recursive.consensus;
  stage.balance_tol = recursive.balance_tol;
  const Averager averager(network.graph, stage, stage.consensus.tol);

  JointResult out;
  out.algorithm = JointAlgorithm::Recursive;
  Vector p = coordinate_generation(network, p_d, stage).p_g;
  out.history.push_back(p);
  const double blowup = 1e12 * (1.0 + p_d.cwiseAbs().maxCoeff());

  double last_step = INFINITY;
  for (int k = 1; k <= recursive.max_iter; ++k) {
    Vector update;
    try {
      const FlowResult flow = coordinate_flow(network, p, p_d, stage);
      const Ratio lambda = joint_lambda_rounds(network, p_d, flow.lambda_v, averager);
      update = joint_generation(network, lambda.per_node, flow.lambda_v);
    } catch (const NumericalError&) {
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

  if (!out.diverged) {
    const FlowResult flow = coordinate_flow(network, p, p_d, stage);
    const Ratio lambda = joint_lambda_rounds(network, p_d, flow.lambda_v, averager);
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

}  // namespace energynet::message
