#include "property_checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "energynet/agents.hpp"
#include "energynet/errors.hpp"
#include "energynet/generation.hpp"
#include "energynet/joint.hpp"
#include "energynet/oracle.hpp"
#include "energynet/runner.hpp"
#include "energynet/scenario.hpp"

namespace checks {

using namespace energynet;

void Outcome::expect(bool condition, const std::string& what) {
  ++checked;
  if (!condition && failures.size() < 20) failures.push_back(what);
}

namespace {

struct Instance {
  int seed = 0;
  ScenarioSpec spec;
  EnergyNetwork net;
  Vector p_d;
};

Instance instance(int seed) {
  Instance in;
  in.seed = seed;
  in.spec = random_scenario(3 + seed % 6, static_cast<std::uint64_t>(seed));
  in.net = in.spec.network();
  in.p_d = in.spec.p_desired();
  return in;
}

std::string label(const Instance& in, const std::string& what) {
  std::ostringstream s;
  s << "seed " << in.seed << " (n=" << in.net.node_count() << "): " << what;
  return s.str();
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool close(const Vector& a, const Vector& b, double rel) {
  if (a.size() != b.size()) return false;
  return max_abs(a - b) <= rel * std::max({1.0, max_abs(a), max_abs(b)});
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)}); }

ConsensusOptions consensus(const ScenarioSpec& spec) {
  ConsensusOptions o;
  o.tol = spec.options.tol;
  o.t_max = spec.options.t_max;
  return o;
}

TwoScaleOptions twoscale(const ScenarioSpec& spec) {
  TwoScaleOptions o;
  o.outer_tol = spec.options.tol;
  o.inner_tol = spec.options.inner_tol;
  o.t_max = spec.options.t_max;
  return o;
}

RecursiveOptions recursive(const ScenarioSpec& spec) {
  RecursiveOptions o;
  o.consensus = consensus(spec);
  o.relaxation = 0.0;
  o.max_iter = 2000;
  o.epsilon.assign(spec.nodes.size(), 1e-10);
  return o;
}

/// Total generation plus flow cost.
double total_cost(const EnergyNetwork& net, const Vector& p_g, const FlowMap& flows) {
  return generation_cost(net.generation, p_g) + flow_cost(net.flow, flows);
}

/// Q' spans the complement of the all-ones direction.
Matrix complement_basis(int n) {
  const Matrix q = Vector::Ones(n).householderQr().householderQ();
  return q.rightCols(n - 1);
}

template <typename F>
void guarded(Outcome& out, const Instance& in, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    out.expect(false, label(in, std::string("threw: ") + e.what()));
  }
}

}  // namespace

std::vector<Outcome> oracle_equivalence(int count) {
  Outcome gen{"generation: distributed vs closed form"};
  Outcome flow{"flow: distributed vs centralized"};
  Outcome joint{"joint two-scale vs centralized"};
  Outcome rec{"joint recursive vs centralized"};
  Outcome qp_dec{"full QP vs reductions (decoupled)"};
  Outcome qp_joint{"full QP vs reductions (joint)"};

  for (int seed = 1; seed <= count; ++seed) {
    const Instance in = instance(seed);
    const EnergyNetwork& net = in.net;
    const GenerationResult g_oracle = solve_generation_centralized(net, in.p_d);
    const FlowResult f_oracle = solve_flow_centralized(net, g_oracle.p_g, in.p_d);
    const JointResult j_oracle = solve_joint_centralized(net, in.p_d);

    guarded(gen, in, [&] {
      const GenerationResult g = coordinate_generation(net, in.p_d, {consensus(in.spec), 1e-6});
      gen.expect(close(g.lambda_star, closed_form_lambda(net, in.p_d), 1e-6), label(in, "lambda*"));
      gen.expect(close(g.p_g, g_oracle.p_g, 1e-6), label(in, "p_g"));
    });
    guarded(flow, in, [&] {
      const FlowResult f = coordinate_flow(net, g_oracle.p_g, in.p_d, {consensus(in.spec), 1e-6});
      flow.expect(close(f.flows.canonical(), f_oracle.flows.canonical(), 1e-6), label(in, "flows"));
      flow.expect(close(f.lambda_v, f_oracle.lambda_v, 1e-6), label(in, "lambda_v"));
    });
    guarded(joint, in, [&] {
      const JointResult j = coordinate_joint_twoscale(net, in.p_d, twoscale(in.spec));
      joint.expect(close(j.p_g, j_oracle.p_g, 1e-6), label(in, "p_g"));
      joint.expect(close(j.flows.canonical(), j_oracle.flows.canonical(), 1e-6), label(in, "flows"));
      joint.expect(close(j.lambda_v, j_oracle.lambda_v, 1e-6), label(in, "lambda_v"));
    });
    guarded(rec, in, [&] {
      const JointResult r = coordinate_joint_recursive(net, in.p_d, recursive(in.spec));
      rec.expect(r.converged, label(in, "recursion did not converge"));
      rec.expect(close(r.p_g, j_oracle.p_g, 1e-6), label(in, "p_g"));
      rec.expect(close(r.flows.canonical(), j_oracle.flows.canonical(), 1e-6), label(in, "flows"));
    });
    guarded(qp_dec, in, [&] {
      const QpSolution q = solve_full_qp(net, in.p_d, QpMode::Decoupled);
      qp_dec.expect(close(q.p_g, g_oracle.p_g, 1e-9), label(in, "p_g"));
      qp_dec.expect(close(q.lambda, g_oracle.lambda_star, 1e-9), label(in, "lambda"));
      qp_dec.expect(close(q.flows.canonical(), f_oracle.flows.canonical(), 1e-9), label(in, "flows"));
      qp_dec.expect(close(q.lambda_v, f_oracle.lambda_v, 1e-9), label(in, "lambda_v"));
      qp_dec.expect(close(q.lambda_e, f_oracle.lambda_e, 1e-9), label(in, "lambda_e"));
    });
    guarded(qp_joint, in, [&] {
      const QpSolution q = solve_full_qp(net, in.p_d, QpMode::Joint);
      qp_joint.expect(close(q.p_g, j_oracle.p_g, 1e-9), label(in, "p_g"));
      qp_joint.expect(close(q.lambda, j_oracle.lambda, 1e-9), label(in, "lambda"));
      qp_joint.expect(close(q.flows.canonical(), j_oracle.flows.canonical(), 1e-9), label(in, "flows"));
      qp_joint.expect(close(q.lambda_v, j_oracle.lambda_v, 1e-9), label(in, "lambda_v"));
      qp_joint.expect(q.dropped_rows == 1, label(in, "expected exactly one dependent row"));
      for (int e = 0; e < net.graph.edge_count(); ++e) {
        const auto [i, k] = net.graph.edges()[e];
        qp_joint.expect(close(q.lambda_e(e), -0.5 * (q.lambda_v(i) + q.lambda_v(k)), 1e-9), label(in, "lambda_e relation"));
      }
    });
  }
  return {gen, flow, joint, rec, qp_dec, qp_joint};
}

std::vector<Outcome> invariant_suites(int count) {
  Outcome mean{"mean conservation"};
  Outcome decay{"disagreement decay"};
  Outcome gauge{"gauge invariance"};
  Outcome anti{"antisymmetry"};
  Outcome delivered{"delivered levels"};
  Outcome dominance{"joint cost <= decoupled cost"};

  for (int seed = 1; seed <= count; ++seed) {
    const Instance in = instance(seed);
    const EnergyNetwork& net = in.net;
    const int n = net.node_count();
    const Matrix lap = weighted_laplacian(net.graph, net.flow_weights());

    guarded(mean, in, [&] {
      ConsensusOptions o = consensus(in.spec);
      o.record_trace = true;
      o.trace_stride = 1;
      o.max_steps = 400;
      o.tol = 1e-300;
      Vector b = in.p_d;
      b.array() -= b.mean();
      const LinearFlowProblem problem{lap, b, in.p_d, o};
      const ConsensusRun r = integrate(problem);
      const double m0 = in.p_d.mean();
      for (const auto& s : r.trace) mean.expect(std::abs(s.state.mean() - m0) <= 1e-9 * (1.0 + std::abs(m0)), label(in, "mean moved"));
    });

    guarded(decay, in, [&] {
      ConsensusOptions o = consensus(in.spec);
      o.record_trace = true;
      o.trace_stride = 1;
      const Matrix unit = laplacian(net.graph);
      const ConsensusRun r = average_consensus(net.graph, in.p_d, o);
      // Evaluated on the disagreement x - mean(x), which gives the same form
      // without the mean's rounding error.
      const auto form = [&](const Vector& x) {
        const Vector y = x.array() - x.mean();
        return y.dot(unit * y);
      };
      const double floor = 1e-14 * form(in.p_d);
      double previous = INFINITY;
      for (const auto& s : r.trace) {
        const double q = form(s.state);
        decay.expect(q <= previous * (1.0 + 1e-12) + floor, label(in, "x^T L x increased"));
        previous = q;
      }
    });

    guarded(gauge, in, [&] {
      const JointResult j = solve_joint_centralized(net, in.p_d);
      const double c = 10.0 * std::sin(seed);
      const Vector shifted = j.lambda_v.array() + c;
      gauge.expect(max_abs(flow_rule(net, shifted).canonical() - flow_rule(net, j.lambda_v).canonical()) <= 1e-12 * (1.0 + std::abs(c)),
                   label(in, "flows moved under a shift"));
      const double lambda = joint_lambda(net, in.p_d, shifted);
      gauge.expect(close(lambda, j.lambda - c, 1e-12), label(in, "lambda did not shift by -c"));
      gauge.expect(close(joint_generation(net, Vector::Constant(n, lambda), shifted), j.p_g, 1e-12),
                   label(in, "generation moved under a shift"));
    });

    guarded(anti, in, [&] {
      const GenerationResult g = coordinate_generation(net, in.p_d, {consensus(in.spec), 1e-6});
      const FlowResult f = coordinate_flow(net, g.p_g, in.p_d, {consensus(in.spec), 1e-6});
      for (const auto& [i, k] : net.graph.edges()) anti.expect(f.flows.at(i, k) == -f.flows.at(k, i), label(in, "p_ij != -p_ji"));
      anti.expect(kkt_residuals(net, f, g.p_g, in.p_d).antisymmetry == 0.0, label(in, "antisymmetry residual"));

      Vector level = g.p_g - in.p_d;
      for (int i = 0; i < n; ++i) {
        for (const auto& inc : net.graph.incident(i)) level(i) += f.flows.at(i, inc.neighbor);
      }
      delivered.expect(max_abs(level) <= 1e-6 * (1.0 + max_abs(in.p_d)), label(in, "decoupled delivered levels"));

      const JointResult j = coordinate_joint_twoscale(net, in.p_d, twoscale(in.spec));
      Vector joint_level = j.p_g - in.p_d;
      for (int i = 0; i < n; ++i) {
        for (const auto& inc : net.graph.incident(i)) joint_level(i) += j.flows.at(i, inc.neighbor);
      }
      delivered.expect(max_abs(joint_level) <= 1e-6 * (1.0 + max_abs(in.p_d)), label(in, "joint delivered levels"));

      const double decoupled = total_cost(net, g.p_g, f.flows);
      const double together = total_cost(net, j.p_g, j.flows);
      dominance.expect(together <= decoupled + 1e-9 * (1.0 + std::abs(decoupled)), label(in, "joint costs more"));
    });
  }
  return {mean, decay, gauge, anti, delivered, dominance};
}

std::vector<Outcome> structural_checks(int count) {
  Outcome definite{"Q'^T L Q' positive definite"};
  Outcome forcing{"joint forcing sums to zero"};
  Outcome loops{"halving the inner tolerance stays within the outer tolerance"};
  for (int seed = 1; seed <= count; ++seed) {
    const Instance in = instance(seed);
    const EnergyNetwork& net = in.net;
    const int n = net.node_count();
    const Matrix q = complement_basis(n);
    for (const Matrix& l : {weighted_laplacian(net.graph, net.flow_weights()), joint_system_matrix(net)}) {
      const Matrix reduced = q.transpose() * l * q;
      const double smallest = Eigen::SelfAdjointEigenSolver<Matrix>(reduced, Eigen::EigenvaluesOnly).eigenvalues()(0);
      definite.expect(smallest > 1e-9, label(in, "reduced Laplacian not positive definite"));
    }
    const Vector w = joint_forcing(net, in.p_d);
    forcing.expect(std::abs(w.sum()) <= 1e-9 * (1.0 + w.cwiseAbs().sum()), label(in, "1^T w_J"));

    if (seed % 5 == 0) {
      guarded(loops, in, [&] {
        TwoScaleOptions a = twoscale(in.spec);
        a.outer_tol = 1e-8;
        a.inner_tol = 1e-10;
        TwoScaleOptions b = a;
        b.inner_tol = 0.5 * a.inner_tol;
        const JointResult ra = coordinate_joint_twoscale(net, in.p_d, a);
        const JointResult rb = coordinate_joint_twoscale(net, in.p_d, b);
        loops.expect(max_abs(ra.p_g - rb.p_g) < a.outer_tol, label(in, "p_g moved"));
        loops.expect(max_abs(ra.flows.canonical() - rb.flows.canonical()) < a.outer_tol, label(in, "flows moved"));
      });
    }
  }
  return {definite, forcing, loops};
}

namespace {

void compare_modes(Outcome& out, const ScenarioSpec& spec, double tol, const std::string& name) {
  for (Algorithm a : {Algorithm::Gen, Algorithm::Flow, Algorithm::JointRecursive, Algorithm::JointTwoScale}) {
    RunRequest req;
    req.algorithm = a;
    if (a == Algorithm::Flow && !spec.p_generated()) {
      RunRequest gen;
      gen.algorithm = Algorithm::Gen;
      req.p_g = generation_from_report(run(spec, gen).report, static_cast<int>(spec.nodes.size()));
    }
    const std::string what = name + " " + std::string(to_string(a));
    try {
      req.mode = ExecutionMode::Matrix;
      const Report m = run(spec, req).report;
      req.mode = ExecutionMode::Message;
      const Report g = run(spec, req).report;
      double worst = 0.0;
      for (const char* key : {"p_g", "lambda_v", "lambda_per_node"}) {
        if (!m.contains(key) && !g.contains(key)) continue;
        if (!m.contains(key) || !g.contains(key) || m[key].size() != g[key].size()) {
          out.expect(false, what + ": " + key + " differs in shape");
          continue;
        }
        for (std::size_t i = 0; i < m[key].size(); ++i) {
          worst = std::max(worst, std::abs(m[key][i].get<double>() - g[key][i].get<double>()));
        }
      }
      const std::size_t edges = m.contains("flows") && g.contains("flows") ? m["flows"].size() : 0;
      out.expect(m.contains("flows") == g.contains("flows"), what + ": flows present in one mode only");
      for (std::size_t e = 0; e < edges; ++e) {
        worst = std::max(worst, std::abs(m["flows"][e]["value"].get<double>() - g["flows"][e]["value"].get<double>()));
      }
      std::ostringstream s;
      s << what << ": max difference " << worst;
      out.expect(worst <= tol, s.str());
    } catch (const std::exception& e) {
      out.expect(false, what + " threw: " + e.what());
    }
  }
}

}  // namespace

Outcome mode_equivalence(double tol) {
  Outcome out{"message vs matrix on bundled scenarios"};
  for (const std::string& name : bundled_scenario_names()) compare_modes(out, *bundled_scenario(name), tol, name);
  return out;
}

Outcome random_mode_equivalence(int count, double tol) {
  Outcome out{"message vs matrix on random scenarios"};
  for (int seed = 1; seed <= count; ++seed) {
    ScenarioSpec spec = random_scenario(3 + seed % 6, static_cast<std::uint64_t>(seed));
    spec.options.relaxation = 0.0;
    spec.options.max_iter = 2000;
    spec.options.epsilon.assign(spec.nodes.size(), 1e-10);
    compare_modes(out, spec, tol, "seed " + std::to_string(seed));
  }
  return out;
}

}  // namespace checks
