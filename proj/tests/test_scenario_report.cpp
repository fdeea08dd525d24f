#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "energynet/errors.hpp"
#include "energynet/report.hpp"
#include "energynet/runner.hpp"
#include "energynet/scenario.hpp"
#include "fixtures.hpp"

using namespace energynet;
using nlohmann::json;

namespace {

json triangle() {
  return json::parse(R"({
    "name": "triangle",
    "nodes": [
      {"id": 1, "xi": 1.0, "zeta": 0.5, "p_desired": 3.0},
      {"id": 2, "xi": 2.0, "p_desired": 1.0},
      {"id": 3, "xi": 0.5, "zeta": -1.0, "eta": 4.0, "p_desired": 2.0}
    ],
    "edges": [
      {"from": 1, "to": 2, "alpha": 1.0, "beta": 0.2},
      {"from": 3, "to": 2, "alpha": 2.0, "beta": 0.3},
      {"from": 1, "to": 3, "alpha": 0.5}
    ]
  })");
}

std::vector<std::string> violations_of(const json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& list, const std::string& text) {
  return std::any_of(list.begin(), list.end(), [&](const std::string& s) { return s.find(text) != std::string::npos; });
}

RunRequest request(Algorithm a) {
  RunRequest r;
  r.algorithm = a;
  return r;
}

json strip_timing(json report) {
  report.erase("timing");
  return report;
}

}  // namespace

TEST_CASE("bundled scenarios load and describe the case study") {
  const auto names = bundled_scenario_names();
  CHECK(std::find(names.begin(), names.end(), "paper_sec4") != names.end());
  CHECK(std::find(names.begin(), names.end(), "two_node") != names.end());

  const ScenarioSpec spec = load_scenario("paper_sec4");
  const EnergyNetwork net = spec.network();
  const EnergyNetwork ref = fixtures::case_study();
  REQUIRE(net.node_count() == 6);
  REQUIRE(net.graph.edges() == ref.graph.edges());
  for (int i = 0; i < 6; ++i) {
    CHECK(net.generation[i].xi == ref.generation[i].xi);
    CHECK(net.generation[i].zeta == doctest::Approx(ref.generation[i].zeta).epsilon(1e-14));
  }
  for (int e = 0; e < 7; ++e) {
    CHECK(net.flow[e].alpha == ref.flow[e].alpha);
    CHECK(net.flow[e].beta == ref.flow[e].beta);
  }
  CHECK(spec.p_desired() == fixtures::case_desired());
  REQUIRE(spec.p_generated());
  CHECK((*spec.p_generated() - fixtures::case_generation_minimum()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_FALSE(bundled_scenario("nope"));
}

TEST_CASE("a valid scenario maps ids and flips reversed edges") {
  const ScenarioSpec spec = scenario_from_json(triangle());
  const EnergyNetwork net = spec.network();
  CHECK(net.generation[1].zeta == 0.0);
  CHECK(net.generation[2].eta == 4.0);
  // 3 -> 2 is stored as 2 -> 3 with the opposite beta.
  const int e = *net.graph.edge_index(1, 2);
  CHECK(net.graph.edges()[e] == EdgeKey{1, 2});
  CHECK(net.flow[e].beta == -0.3);
  CHECK(net.edge_cost(2, 1).beta == 0.3);
  CHECK(net.flow[*net.graph.edge_index(0, 2)].beta == 0.0);
}

TEST_CASE("non-contiguous ids are mapped in listing order") {
  json doc = triangle();
  doc["nodes"][0]["id"] = 10;
  doc["nodes"][1]["id"] = 20;
  doc["nodes"][2]["id"] = 7;
  doc["edges"] = json::parse(R"([{"from": 10, "to": 20, "alpha": 1}, {"from": 20, "to": 7, "alpha": 1}])");
  const ScenarioSpec spec = scenario_from_json(doc);
  CHECK(spec.index_of(10) == 0);
  CHECK(spec.index_of(7) == 2);
  const Report r = run(spec, request(Algorithm::Gen)).report;
  CHECK(r["nodes"] == json::array({10, 20, 7}));
}

TEST_CASE("min_location gives the same network as zeta and eta") {
  json a = triangle();
  a["nodes"][1] = json::parse(R"({"id": 2, "xi": 2.0, "min_location": 1.5, "min_value": 3.0, "p_desired": 1.0})");
  const GenCost c = scenario_from_json(a).network().generation[1];
  CHECK(c.zeta == doctest::Approx(-6.0));
  CHECK(c.eta == doctest::Approx(7.5));
  a["nodes"][1]["zeta"] = 1.0;
  CHECK(mentions(violations_of(a), "nodes[1]: give zeta/eta or min_location/min_value, not both"));
}

TEST_CASE("zero alpha names the edge") {
  json doc = triangle();
  doc["edges"][1]["alpha"] = 0.0;
  const auto v = violations_of(doc);
  CHECK(mentions(v, "edges[1]: alpha of edge (3,2) must be positive"));
}

TEST_CASE("unknown and mistyped fields are rejected together") {
  json doc = triangle();
  doc["nodes"][0]["colour"] = "red";
  doc["edges"][0]["alpha"] = "big";
  doc["bogus"] = 1;
  const auto v = violations_of(doc);
  CHECK(mentions(v, "nodes[0].colour: unknown field"));
  CHECK(mentions(v, "edges[0].alpha: expected a number"));
  CHECK(mentions(v, "bogus: unknown field"));
}

TEST_CASE("every semantic problem is listed at once") {
  json doc = triangle();
  doc["nodes"][2]["xi"] = -1.0;
  doc["edges"] = json::parse(R"([{"from": 1, "to": 2, "alpha": 0}])");
  doc["options"] = json::parse(R"({"tol": 1e-9, "inner_tol": 1e-6, "relaxation": 2})");
  const auto v = violations_of(doc);
  CHECK(mentions(v, "nodes[2].xi"));
  CHECK(mentions(v, "alpha of edge (1,2)"));
  CHECK(mentions(v, "edges: graph not connected"));
  CHECK(mentions(v, "options.inner_tol: must be strictly tighter"));
  CHECK(mentions(v, "options.relaxation"));
  CHECK(v.size() >= 5);
}

TEST_CASE("structural problems") {
  json doc = triangle();
  doc["edges"].push_back(json::parse(R"({"from": 2, "to": 1, "alpha": 1})"));
  doc["edges"].push_back(json::parse(R"({"from": 2, "to": 9, "alpha": 1})"));
  doc["nodes"].push_back(json::parse(R"({"id": 3, "xi": 1, "p_desired": 0})"));
  const auto v = violations_of(doc);
  CHECK(mentions(v, "duplicate edge (2,1)"));
  CHECK(mentions(v, "edges[4].to: unknown node id 9"));
  CHECK(mentions(v, "duplicate node id 3"));
}

TEST_CASE("syntax errors report the line") {
  const std::string text = "{\n  \"name\": \"x\",\n  \"nodes\": [,]\n}\n";
  try {
    parse_scenario(text, "broken.json");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("broken.json:3: invalid JSON") != std::string::npos);
  }
}

TEST_CASE("missing scenario files are validation errors") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ValidationError);
}

TEST_CASE("echo round-trips with defaults filled in") {
  const ScenarioSpec spec = scenario_from_json(triangle());
  const json echo = to_json(spec);
  CHECK(echo["options"]["tol"] == 1e-9);
  CHECK(echo["options"]["mode"] == "matrix");
  CHECK(echo["nodes"][1]["zeta"] == 0.0);
  CHECK(to_json(scenario_from_json(echo)) == echo);
  for (const auto& name : bundled_scenario_names()) {
    const json bundled = to_json(*bundled_scenario(name));
    CHECK(to_json(parse_scenario(bundled.dump())) == bundled);
  }
}

TEST_CASE("reports round-trip byte for byte") {
  for (Algorithm a : {Algorithm::Gen, Algorithm::Flow, Algorithm::JointRecursive, Algorithm::JointTwoScale,
                      Algorithm::OracleDecoupled, Algorithm::OracleJoint}) {
    const Report r = run(load_scenario("paper_sec4"), request(a)).report;
    const std::string text = serialize_report(r);
    CHECK(serialize_report(parse_report(text)) == text);
  }
}

TEST_CASE("runs are deterministic apart from wall time") {
  const ScenarioSpec spec = load_scenario("paper_sec4");
  for (Algorithm a : {Algorithm::Gen, Algorithm::JointRecursive, Algorithm::JointTwoScale}) {
    for (ExecutionMode m : {ExecutionMode::Matrix, ExecutionMode::Message}) {
      RunRequest req{a, m, std::nullopt, false};
      CHECK(serialize_report(strip_timing(run(spec, req).report)) ==
            serialize_report(strip_timing(run(spec, req).report)));
    }
  }
}

TEST_CASE("report contents") {
  const ScenarioSpec spec = load_scenario("paper_sec4");
  const Report r = run(spec, request(Algorithm::OracleJoint)).report;
  CHECK(r["algorithm"] == "oracle-joint");
  CHECK(r["scenario"] == "paper_sec4");
  REQUIRE(r["flows"].size() == 7);
  CHECK(r["flows"][6]["from"] == 4);
  CHECK(r["flows"][6]["to"] == 6);
  CHECK(r["flows"][6]["value"].get<double>() == doctest::Approx(fixtures::kRefJointFlows[6]).epsilon(1e-10));
  CHECK(r["costs"]["flow"].get<double>() == doctest::Approx(fixtures::kRefJointFlowCost).epsilon(1e-10));

  // Costs can be recomputed from the primal values.
  const EnergyNetwork net = spec.network();
  const Vector p_g = generation_from_report(r, 6);
  Vector canonical(7);
  for (int e = 0; e < 7; ++e) canonical(e) = r["flows"][e]["value"].get<double>();
  CHECK(r["costs"]["generation"].get<double>() == doctest::Approx(generation_cost(net.generation, p_g)).epsilon(1e-9));
  CHECK(r["costs"]["flow"].get<double>() ==
        doctest::Approx(flow_cost(net.flow, FlowMap(net.graph, canonical))).epsilon(1e-9));
  CHECK_THROWS_AS(generation_from_report(r, 5), ValidationError);
}

TEST_CASE("flow needs a generation input") {
  ScenarioSpec spec = scenario_from_json(triangle());
  CHECK_THROWS_AS(run(spec, request(Algorithm::Flow)), PreconditionError);
  RunRequest req = request(Algorithm::Flow);
  req.p_g = generation_from_report(run(spec, request(Algorithm::Gen)).report, 3);
  const Report r = run(spec, req).report;
  CHECK(r["kkt"]["node_balance"].get<double>() < 1e-6);
}

TEST_CASE("generation bounds are reported") {
  json doc = triangle();
  doc["nodes"][0]["p_g_max"] = 0.1;
  doc["nodes"][1]["p_g_min"] = 0.0;
  const Report r = run(scenario_from_json(doc), request(Algorithm::Gen)).report;
  REQUIRE(r.contains("bounds"));
  CHECK(r["bounds"]["all_feasible"] == false);
}

TEST_CASE("trace CSV") {
  const RunOutcome out = run(load_scenario("two_node"), {Algorithm::JointTwoScale, std::nullopt, std::nullopt, true});
  const std::string csv = out.trace.csv();
  CHECK(csv.rfind("t,variable,id,value\n", 0) == 0);
  REQUIRE_FALSE(out.trace.rows().empty());
  std::map<std::pair<std::string, int>, double> last;
  for (const auto& row : out.trace.rows()) {
    const auto key = std::make_pair(row.variable, row.id);
    if (last.count(key)) CHECK(row.t >= last[key]);
    last[key] = row.t;
  }
}

TEST_CASE("compare exit codes") {
  const ScenarioSpec spec = load_scenario("paper_sec4");
  const Report two = run(spec, request(Algorithm::JointTwoScale)).report;
  const Report oracle = run(spec, request(Algorithm::OracleJoint)).report;
  const Report gen = run(spec, request(Algorithm::Gen)).report;

  CHECK(compare_reports(two, two, 0.0).exit_code == kCompareOk);
  CHECK(compare_reports(two, oracle, 1e-3).exit_code == kCompareOk);
  CHECK(compare_reports(gen, two, 1e-3).exit_code == kCompareOutOfTolerance);

  Report shorter = two;
  shorter["p_g"].erase(shorter["p_g"].size() - 1);
  const Comparison c = compare_reports(two, shorter, 1.0);
  CHECK(c.exit_code == kCompareShapeMismatch);
  CHECK_FALSE(c.mismatches.empty());

  Report relabeled = two;
  relabeled["algorithm"] = "something-else";
  const Comparison n = compare_reports(two, relabeled, 0.0);
  CHECK(n.exit_code == kCompareOk);
  CHECK_FALSE(n.notes.empty());
}

TEST_CASE("random scenarios are reproducible and valid") {
  for (int n : {1, 2, 3, 8, 20}) {
    const ScenarioSpec a = random_scenario(n, 42);
    CHECK(to_json(a) == to_json(random_scenario(n, 42)));
    CHECK(validate_spec(a).empty());
    CHECK(static_cast<int>(a.nodes.size()) == n);
  }
  CHECK(to_json(random_scenario(6, 1)) != to_json(random_scenario(6, 2)));
  const ScenarioSpec s = random_scenario(8, 3);
  for (const auto& node : s.nodes) CHECK((node.xi >= 0.5 && node.xi <= 10.0));
  for (const auto& edge : s.edges) {
    CHECK((edge.alpha >= 0.5 && edge.alpha <= 10.0));
    CHECK((edge.beta >= -1.0 && edge.beta <= 1.0));
  }
}
