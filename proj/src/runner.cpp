#include "energynet/runner.hpp"

#include <chrono>
#include <cmath>

#include "energynet/agents.hpp"
#include "energynet/errors.hpp"
#include "energynet/flow.hpp"
#include "energynet/generation.hpp"
#include "energynet/joint.hpp"
#include "energynet/oracle.hpp"

namespace energynet {

using nlohmann::json;

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Gen:
      return "gen";
    case Algorithm::Flow:
      return "flow";
    case Algorithm::JointRecursive:
      return "joint-recursive";
    case Algorithm::JointTwoScale:
      return "joint-twoscale";
    case Algorithm::OracleDecoupled:
      return "oracle-decoupled";
    case Algorithm::OracleJoint:
      return "oracle-joint";
  }
  return "unknown";
}

std::string_view to_string(ExecutionMode mode) { return mode == ExecutionMode::Matrix ? "matrix" : "message"; }

std::optional<Algorithm> parse_algorithm(std::string_view tag) {
  for (Algorithm a : {Algorithm::Gen, Algorithm::Flow, Algorithm::JointRecursive, Algorithm::JointTwoScale,
                      Algorithm::OracleDecoupled, Algorithm::OracleJoint}) {
    if (to_string(a) == tag) return a;
  }
  return std::nullopt;
}

std::optional<ExecutionMode> parse_mode(std::string_view tag) {
  if (tag == "matrix") return ExecutionMode::Matrix;
  if (tag == "message") return ExecutionMode::Message;
  return std::nullopt;
}

Vector generation_from_report(const Report& report, int node_count) {
  if (!report.contains("p_g") || !report.at("p_g").is_array()) {
    throw ValidationError("report has no p_g array");
  }
  const json& arr = report.at("p_g");
  if (static_cast<int>(arr.size()) != node_count) {
    throw ValidationError("report p_g has " + std::to_string(arr.size()) + " entries, scenario has " +
                          std::to_string(node_count) + " nodes");
  }
  Vector out(node_count);
  for (int i = 0; i < node_count; ++i) {
    if (!arr[i].is_number()) throw ValidationError("report p_g entries must be numbers");
    out(i) = arr[i].get<double>();
  }
  return out;
}

namespace {

json to_array(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

std::vector<int> node_ids(const ScenarioSpec& spec) {
  std::vector<int> ids;
  for (const NodeSpec& n : spec.nodes) ids.push_back(n.id);
  return ids;
}

json flows_json(const ScenarioSpec& spec, const FlowMap& flows) {
  json out = json::array();
  for (int e = 0; e < flows.size(); ++e) {
    const EdgeKey& key = flows.edges()[e];
    out.push_back({{"from", spec.nodes[key.first].id}, {"to", spec.nodes[key.second].id}, {"value", flows.canonical()(e)}});
  }
  return out;
}

ConsensusOptions consensus_options(const SolverSettings& o, bool trace) {
  ConsensusOptions c;
  c.dt = o.dt;
  c.tol = o.tol;
  c.t_max = o.t_max;
  c.trace_stride = o.trace_stride;
  c.record_trace = trace;
  return c;
}

message::MessageOptions message_options(const SolverSettings& o, bool trace) {
  message::MessageOptions m;
  m.consensus = consensus_options(o, trace);
  m.schedule = o.schedule == "reversed"   ? message::Schedule::Reversed
               : o.schedule == "shuffled" ? message::Schedule::Shuffled
                                          : message::Schedule::Natural;
  m.seed = o.seed;
  m.balance_tol = o.balance_tol;
  return m;
}

TwoScaleOptions twoscale_options(const SolverSettings& o, bool trace) {
  TwoScaleOptions t;
  t.dt = o.dt;
  t.inner_tol = o.inner_tol;
  t.outer_tol = o.tol;
  t.t_max = o.t_max;
  t.inner_budget = o.inner_budget;
  t.trace_stride = o.trace_stride;
  t.record_trace = trace;
  return t;
}

RecursiveOptions recursive_options(const SolverSettings& o) {
  RecursiveOptions r;
  r.epsilon = o.epsilon;
  r.max_iter = o.max_iter;
  r.relaxation = o.relaxation;
  r.consensus = consensus_options(o, false);
  r.balance_tol = o.balance_tol;
  return r;
}

json stats_json(const RunStats& s) {
  return {{"converged", s.converged}, {"elapsed", s.elapsed}, {"residual", s.residual}, {"steps", s.steps},
          {"dt", s.dt}};
}

json generation_kkt(const EnergyNetwork& net, const Vector& p_g, const Vector& lambda_per_node, const Vector& p_d) {
  double stationarity = 0.0;
  for (int i = 0; i < net.node_count(); ++i) {
    const auto& c = net.generation[i];
    stationarity = std::max(stationarity, std::abs(2.0 * c.xi * p_g(i) + c.zeta + lambda_per_node(i)));
  }
  return {{"balance", std::abs(p_g.sum() - p_d.sum())}, {"generation_stationarity", stationarity}};
}

void add_flow_kkt(json& kkt, const FlowKktResiduals& r) {
  kkt["flow_stationarity"] = r.stationarity;
  kkt["node_balance"] = r.node_balance;
  kkt["antisymmetry"] = r.antisymmetry;
}

json bounds_json(const ScenarioSpec& spec, const BoundsReport& b) {
  json nodes = json::array();
  for (std::size_t k = 0; k < b.nodes.size(); ++k) {
    const NodeBoundsCheck& n = b.nodes[k];
    json j{{"id", spec.nodes[k].id}, {"p_g", n.p_g}, {"probe", n.probe}, {"feasible", n.feasible},
           {"probe_feasible", n.probe_feasible}};
    j["lower"] = n.lower ? json(*n.lower) : json(nullptr);
    j["upper"] = n.upper ? json(*n.upper) : json(nullptr);
    if (n.sufficient_condition) {
      j["xi_ratio_sum"] = *n.xi_ratio_sum;
      j["sufficient_condition"] = *n.sufficient_condition;
    }
    nodes.push_back(j);
  }
  return {{"all_feasible", b.all_feasible}, {"uniform_zeta", b.uniform_zeta}, {"total_demand", b.total_demand},
          {"nodes", nodes}};
}

bool has_bounds(const ScenarioSpec& spec) {
  for (const NodeSpec& n : spec.nodes) {
    if (n.p_g_min || n.p_g_max) return true;
  }
  return false;
}

void put_costs(json& report, const EnergyNetwork& net, const Vector& p_g, const FlowMap* flows) {
  const double gen = generation_cost(net.generation, p_g);
  json costs{{"generation", gen}};
  if (flows != nullptr) {
    const double flow = flow_cost(net.flow, *flows);
    costs["flow"] = flow;
    costs["total"] = gen + flow;
  }
  report["costs"] = costs;
}

void put_joint(json& report, const ScenarioSpec& spec, const EnergyNetwork& net, const JointResult& r,
               const Vector& p_d) {
  report["p_g"] = to_array(r.p_g);
  report["lambda"] = r.lambda;
  report["lambda_per_node"] = to_array(r.lambda_per_node);
  report["lambda_v"] = to_array(r.lambda_v);
  report["lambda_e"] = to_array(r.lambda_e);
  report["flows"] = flows_json(spec, r.flows);
  put_costs(report, net, r.p_g, &r.flows);
  const JointKktResiduals k = joint_kkt_residuals(net, r, p_d);
  report["kkt"] = {{"balance", k.global_balance},
                   {"flow_stationarity", k.flow_stationarity},
                   {"node_balance", k.node_balance},
                   {"antisymmetry", k.antisymmetry},
                   {"generation_stationarity", k.generation_stationarity}};
  json history = json::array();
  for (const Vector& h : r.history) history.push_back(to_array(h));
  report["convergence"] = {{"converged", r.converged}, {"diverged", r.diverged}, {"iterations", r.iterations},
                           {"elapsed", r.elapsed},     {"residual", r.residual}, {"history", history}};
}

Vector flow_input(const ScenarioSpec& spec, const RunRequest& request) {
  if (request.p_g) {
    if (request.p_g->size() != static_cast<Eigen::Index>(spec.nodes.size())) {
      throw ValidationError("p_g input does not match the node count");
    }
    return *request.p_g;
  }
  if (auto inline_pg = spec.p_generated()) return *inline_pg;
  throw PreconditionError("flow needs generation levels: set p_generated on every node or pass --pg-from");
}

}  // namespace

RunOutcome run(const ScenarioSpec& spec, const RunRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  const EnergyNetwork net = spec.network();
  const Vector p_d = spec.p_desired();
  const SolverSettings& o = spec.options;
  const ExecutionMode mode = request.mode.value_or(parse_mode(o.mode).value_or(ExecutionMode::Matrix));
  const bool message_mode = mode == ExecutionMode::Message;
  const std::vector<int> ids = node_ids(spec);

  RunOutcome out;
  json& report = out.report;
  report["scenario"] = spec.name;
  report["algorithm"] = std::string(to_string(request.algorithm));
  report["mode"] = std::string(to_string(mode));
  report["nodes"] = ids;
  report["p_desired"] = to_array(p_d);

  switch (request.algorithm) {
    case Algorithm::Gen: {
      const GenerationResult r =
          message_mode ? message::coordinate_generation(net, p_d, message_options(o, request.trace))
                       : coordinate_generation(net, p_d, {consensus_options(o, request.trace), o.balance_tol});
      report["p_g"] = to_array(r.p_g);
      report["lambda"] = r.lambda_star;
      report["lambda_per_node"] = to_array(r.lambda_per_node);
      put_costs(report, net, r.p_g, nullptr);
      report["kkt"] = generation_kkt(net, r.p_g, r.lambda_per_node, p_d);
      report["convergence"] = {{"numerator", stats_json(r.numerator)}, {"denominator", stats_json(r.denominator)}};
      if (has_bounds(spec)) {
        report["bounds"] = bounds_json(spec, check_generation_bounds(net, p_d, r, net.bounds, consensus_options(o, false)));
      }
      out.trace.add_samples("u", r.numerator_trace, ids);
      out.trace.add_samples("v", r.denominator_trace, ids);
      break;
    }
    case Algorithm::Flow: {
      const Vector p_g = flow_input(spec, request);
      const FlowResult r = message_mode
                               ? message::coordinate_flow(net, p_g, p_d, message_options(o, request.trace))
                               : coordinate_flow(net, p_g, p_d, {consensus_options(o, request.trace), o.balance_tol});
      report["p_g"] = to_array(p_g);
      report["lambda_v"] = to_array(r.lambda_v);
      report["lambda_e"] = to_array(r.lambda_e);
      report["flows"] = flows_json(spec, r.flows);
      put_costs(report, net, p_g, &r.flows);
      json kkt;
      add_flow_kkt(kkt, kkt_residuals(net, r, p_g, p_d));
      report["kkt"] = kkt;
      report["convergence"] = stats_json(r.stats);
      out.trace.add_samples("lambda_v", r.trace, ids);
      break;
    }
    case Algorithm::JointRecursive: {
      const JointResult r = message_mode ? message::coordinate_joint_recursive(net, p_d, recursive_options(o),
                                                                               message_options(o, false))
                                         : coordinate_joint_recursive(net, p_d, recursive_options(o));
      put_joint(report, spec, net, r, p_d);
      for (std::size_t k = 0; k < r.history.size(); ++k) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
          out.trace.add(static_cast<double>(k), "p_g", ids[i], r.history[k](static_cast<Eigen::Index>(i)));
        }
      }
      break;
    }
    case Algorithm::JointTwoScale: {
      const TwoScaleOptions t = twoscale_options(o, request.trace);
      const JointResult r = message_mode ? message::coordinate_joint_twoscale(net, p_d, t, message_options(o, false))
                                         : coordinate_joint_twoscale(net, p_d, t);
      put_joint(report, spec, net, r, p_d);
      out.trace.add_samples("lambda_v", r.trace, ids);
      break;
    }
    case Algorithm::OracleDecoupled: {
      const GenerationResult g = solve_generation_centralized(net, p_d);
      const FlowResult f = solve_flow_centralized(net, g.p_g, p_d, o.balance_tol);
      report["p_g"] = to_array(g.p_g);
      report["lambda"] = g.lambda_star;
      report["lambda_per_node"] = to_array(g.lambda_per_node);
      report["lambda_v"] = to_array(f.lambda_v);
      report["lambda_e"] = to_array(f.lambda_e);
      report["flows"] = flows_json(spec, f.flows);
      put_costs(report, net, g.p_g, &f.flows);
      json kkt = generation_kkt(net, g.p_g, g.lambda_per_node, p_d);
      add_flow_kkt(kkt, kkt_residuals(net, f, g.p_g, p_d));
      report["kkt"] = kkt;
      report["convergence"] = {{"converged", true}};
      break;
    }
    case Algorithm::OracleJoint: {
      const JointResult r = solve_joint_centralized(net, p_d);
      put_joint(report, spec, net, r, p_d);
      break;
    }
  }

  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - started;
  report["timing"] = {{"wall_seconds", wall.count()}};
  return out;
}

}  // namespace energynet
