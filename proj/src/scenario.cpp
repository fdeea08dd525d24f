#include "energynet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "energynet/errors.hpp"

namespace energynet {

using nlohmann::json;

namespace {

/// Collects every problem while walking a document instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> violations;

  bool object(const json& doc, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!doc.is_object()) {
      violations.push_back(path + ": expected an object");
      return false;
    }
    for (const auto& [key, value] : doc.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
      if (!known) violations.push_back(join(path, key) + ": unknown field");
    }
    return true;
  }

  std::optional<double> number(const json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) violations.push_back(join(path, key) + ": missing required field");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      violations.push_back(join(path, key) + ": expected a number");
      return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      violations.push_back(join(path, key) + ": must be finite");
      return std::nullopt;
    }
    return d;
  }

  std::optional<long> integer(const json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) violations.push_back(join(path, key) + ": missing required field");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      violations.push_back(join(path, key) + ": expected an integer");
      return std::nullopt;
    }
    return v.get<long>();
  }

  std::optional<std::string> string(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      violations.push_back(join(path, key) + ": expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

std::string at(const std::string& base, std::size_t k) { return base + "[" + std::to_string(k) + "]"; }

void read_options(Reader& r, const json& doc, SolverSettings& out) {
  const std::string path = "options";
  if (!r.object(doc, path,
                {"dt", "tol", "inner_tol", "t_max", "inner_budget", "trace_stride", "balance_tol", "epsilon",
                 "max_iter", "relaxation", "mode", "schedule", "seed"})) {
    return;
  }
  if (auto v = r.number(doc, path, "dt", false)) out.dt = *v;
  if (auto v = r.number(doc, path, "tol", false)) out.tol = *v;
  if (auto v = r.number(doc, path, "inner_tol", false)) out.inner_tol = *v;
  if (auto v = r.number(doc, path, "t_max", false)) out.t_max = *v;
  if (doc.contains("inner_budget") && !doc.at("inner_budget").is_null()) {
    out.inner_budget = r.integer(doc, path, "inner_budget", false);
  }
  if (auto v = r.integer(doc, path, "trace_stride", false)) out.trace_stride = static_cast<int>(*v);
  if (auto v = r.number(doc, path, "balance_tol", false)) out.balance_tol = *v;
  if (auto v = r.integer(doc, path, "max_iter", false)) out.max_iter = static_cast<int>(*v);
  if (auto v = r.number(doc, path, "relaxation", false)) out.relaxation = *v;
  if (auto v = r.string(doc, path, "mode")) out.mode = *v;
  if (auto v = r.string(doc, path, "schedule")) out.schedule = *v;
  if (auto v = r.integer(doc, path, "seed", false)) {
    if (*v < 0) {
      r.violations.push_back("options.seed: must be nonnegative");
    } else {
      out.seed = static_cast<std::uint64_t>(*v);
    }
  }
  if (doc.contains("epsilon")) {
    const json& eps = doc.at("epsilon");
    if (!eps.is_array()) {
      r.violations.push_back("options.epsilon: expected an array of numbers");
    } else {
      for (std::size_t k = 0; k < eps.size(); ++k) {
        if (eps[k].is_number()) {
          out.epsilon.push_back(eps[k].get<double>());
        } else {
          r.violations.push_back(at("options.epsilon", k) + ": expected a number");
        }
      }
    }
  }
}

std::string edge_label(const EdgeSpec& e) {
  return "(" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
}

}  // namespace

int ScenarioSpec::index_of(int id) const {
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].id == id) return static_cast<int>(k);
  }
  throw ValidationError("unknown node id " + std::to_string(id));
}

EnergyNetwork ScenarioSpec::network() const {
  const auto violations = validate_spec(*this);
  if (!violations.empty()) throw ValidationError(violations);

  std::vector<std::pair<int, int>> pairs;
  std::map<EdgeKey, EdgeCost> costs;
  for (const EdgeSpec& e : edges) {
    const int a = index_of(e.from);
    const int b = index_of(e.to);
    pairs.emplace_back(a, b);
    const EdgeCost c{e.alpha, e.beta, e.gamma};
    costs[EdgeKey::canonical(a, b)] = a < b ? c : c.reversed();
  }
  EnergyNetwork net;
  net.graph = Graph(static_cast<int>(nodes.size()), pairs);
  for (const NodeSpec& n : nodes) {
    net.generation.push_back({n.xi, n.zeta, n.eta});
    net.bounds.push_back({n.p_g_min, n.p_g_max});
  }
  for (const EdgeKey& key : net.graph.edges()) net.flow.push_back(costs.at(key));
  return net;
}

Vector ScenarioSpec::p_desired() const {
  Vector out(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) out(static_cast<Eigen::Index>(k)) = nodes[k].p_desired;
  return out;
}

std::optional<Vector> ScenarioSpec::p_generated() const {
  Vector out(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!nodes[k].p_generated) return std::nullopt;
    out(static_cast<Eigen::Index>(k)) = *nodes[k].p_generated;
  }
  return out;
}

std::vector<std::string> validate_spec(const ScenarioSpec& spec) {
  std::vector<std::string> v;
  if (spec.nodes.empty()) v.push_back("nodes: scenario has no nodes");

  std::map<int, int> index;
  bool structure_ok = !spec.nodes.empty();
  int with_generated = 0;
  for (std::size_t k = 0; k < spec.nodes.size(); ++k) {
    const NodeSpec& n = spec.nodes[k];
    const std::string path = at("nodes", k);
    if (!index.emplace(n.id, static_cast<int>(k)).second) {
      v.push_back(path + ".id: duplicate node id " + std::to_string(n.id));
      structure_ok = false;
    }
    if (!(n.xi > 0.0)) v.push_back(path + ".xi: xi of node " + std::to_string(n.id) + " must be positive");
    if (n.p_g_min && n.p_g_max && *n.p_g_min > *n.p_g_max) {
      v.push_back(path + ": p_g_min exceeds p_g_max for node " + std::to_string(n.id));
    }
    if (n.p_generated) ++with_generated;
  }
  if (with_generated != 0 && with_generated != static_cast<int>(spec.nodes.size())) {
    v.push_back("nodes: p_generated must be given for every node or for none");
  }

  std::set<EdgeKey> seen;
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t k = 0; k < spec.edges.size(); ++k) {
    const EdgeSpec& e = spec.edges[k];
    const std::string path = at("edges", k);
    const auto a = index.find(e.from);
    const auto b = index.find(e.to);
    if (a == index.end()) v.push_back(path + ".from: unknown node id " + std::to_string(e.from));
    if (b == index.end()) v.push_back(path + ".to: unknown node id " + std::to_string(e.to));
    if (!(e.alpha > 0.0)) v.push_back(path + ": alpha of edge " + edge_label(e) + " must be positive");
    if (a == index.end() || b == index.end()) {
      structure_ok = false;
      continue;
    }
    if (e.from == e.to) {
      v.push_back(path + ": self-loop on node " + std::to_string(e.from));
      structure_ok = false;
      continue;
    }
    if (!seen.insert(EdgeKey::canonical(a->second, b->second)).second) {
      v.push_back(path + ": duplicate edge " + edge_label(e));
      structure_ok = false;
    }
    pairs.emplace_back(a->second, b->second);
  }
  if (structure_ok) {
    const Graph g(static_cast<int>(spec.nodes.size()), pairs);
    if (!is_connected(g)) v.push_back("edges: graph not connected");
  }

  const SolverSettings& o = spec.options;
  if (!(o.tol > 0.0)) v.push_back("options.tol: must be positive");
  if (!(o.inner_tol > 0.0)) v.push_back("options.inner_tol: must be positive");
  if (o.inner_tol > 0.0 && o.tol > 0.0 && !(o.inner_tol < o.tol)) {
    v.push_back("options.inner_tol: must be strictly tighter than options.tol");
  }
  if (!(o.t_max > 0.0)) v.push_back("options.t_max: must be positive");
  if (o.dt < 0.0) v.push_back("options.dt: must be nonnegative");
  if (o.inner_budget && *o.inner_budget < 1) v.push_back("options.inner_budget: must be at least 1");
  if (o.trace_stride < 1) v.push_back("options.trace_stride: must be at least 1");
  if (!(o.balance_tol > 0.0)) v.push_back("options.balance_tol: must be positive");
  if (o.max_iter < 1) v.push_back("options.max_iter: must be at least 1");
  if (!(o.relaxation >= 0.0 && o.relaxation <= 1.0)) v.push_back("options.relaxation: must lie in [0, 1]");
  if (!o.epsilon.empty() && o.epsilon.size() != spec.nodes.size()) {
    v.push_back("options.epsilon: needs one entry per node");
  }
  for (double e : o.epsilon) {
    if (!(e > 0.0)) {
      v.push_back("options.epsilon: entries must be positive");
      break;
    }
  }
  if (o.mode != "matrix" && o.mode != "message") v.push_back("options.mode: must be matrix or message");
  if (o.schedule != "natural" && o.schedule != "reversed" && o.schedule != "shuffled") {
    v.push_back("options.schedule: must be natural, reversed or shuffled");
  }
  return v;
}

ScenarioSpec scenario_from_json(const json& doc) {
  Reader r;
  ScenarioSpec spec;
  if (!r.object(doc, "", {"name", "nodes", "edges", "options"})) throw ValidationError(r.violations);
  if (auto name = r.string(doc, "", "name")) spec.name = *name;

  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) {
    r.violations.push_back("nodes: expected an array of nodes");
  } else {
    const json& nodes = doc.at("nodes");
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::string path = at("nodes", k);
      const json& n = nodes[k];
      if (!r.object(n, path,
                    {"id", "xi", "zeta", "eta", "min_location", "min_value", "p_desired", "p_g_min", "p_g_max",
                     "p_generated"})) {
        continue;
      }
      NodeSpec node;
      if (auto v = r.integer(n, path, "id", true)) node.id = static_cast<int>(*v);
      if (auto v = r.number(n, path, "xi", true)) node.xi = *v;
      if (auto v = r.number(n, path, "p_desired", true)) node.p_desired = *v;
      const bool by_minimum = n.contains("min_location") || n.contains("min_value");
      if (by_minimum) {
        if (n.contains("zeta") || n.contains("eta")) {
          r.violations.push_back(path + ": give zeta/eta or min_location/min_value, not both");
        }
        const auto loc = r.number(n, path, "min_location", true);
        const auto val = r.number(n, path, "min_value", false);
        if (loc) {
          const GenCost c = params_from_minimum(node.xi, *loc, val.value_or(0.0));
          node.zeta = c.zeta;
          node.eta = c.eta;
        }
      } else {
        if (auto v = r.number(n, path, "zeta", false)) node.zeta = *v;
        if (auto v = r.number(n, path, "eta", false)) node.eta = *v;
      }
      node.p_g_min = r.number(n, path, "p_g_min", false);
      node.p_g_max = r.number(n, path, "p_g_max", false);
      node.p_generated = r.number(n, path, "p_generated", false);
      spec.nodes.push_back(node);
    }
  }

  if (doc.contains("edges")) {
    const json& edges = doc.at("edges");
    if (!edges.is_array()) {
      r.violations.push_back("edges: expected an array of edges");
    } else {
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const std::string path = at("edges", k);
        const json& e = edges[k];
        if (!r.object(e, path, {"from", "to", "alpha", "beta", "gamma"})) continue;
        EdgeSpec edge;
        if (auto v = r.integer(e, path, "from", true)) edge.from = static_cast<int>(*v);
        if (auto v = r.integer(e, path, "to", true)) edge.to = static_cast<int>(*v);
        if (auto v = r.number(e, path, "alpha", true)) edge.alpha = *v;
        if (auto v = r.number(e, path, "beta", false)) edge.beta = *v;
        if (auto v = r.number(e, path, "gamma", false)) edge.gamma = *v;
        spec.edges.push_back(edge);
      }
    }
  }

  if (doc.contains("options")) read_options(r, doc.at("options"), spec.options);

  std::vector<std::string> all = std::move(r.violations);
  if (all.empty()) {
    auto more = validate_spec(spec);
    all.insert(all.end(), more.begin(), more.end());
  }
  if (!all.empty()) throw ValidationError(std::move(all));
  return spec;
}

ScenarioSpec parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    std::ostringstream msg;
    msg << source << ":" << line << ": invalid JSON (" << e.what() << ")";
    throw ValidationError(msg.str());
  }
  return scenario_from_json(doc);
}

ScenarioSpec load_scenario(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    if (auto bundled = bundled_scenario(path)) return *bundled;
    throw ValidationError("scenario not found: " + path);
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

json to_json(const ScenarioSpec& spec) {
  json nodes = json::array();
  for (const NodeSpec& n : spec.nodes) {
    json j{{"id", n.id}, {"xi", n.xi}, {"zeta", n.zeta}, {"eta", n.eta}, {"p_desired", n.p_desired}};
    if (n.p_g_min) j["p_g_min"] = *n.p_g_min;
    if (n.p_g_max) j["p_g_max"] = *n.p_g_max;
    if (n.p_generated) j["p_generated"] = *n.p_generated;
    nodes.push_back(j);
  }
  json edges = json::array();
  for (const EdgeSpec& e : spec.edges) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"alpha", e.alpha}, {"beta", e.beta}, {"gamma", e.gamma}});
  }
  const SolverSettings& o = spec.options;
  json options{{"dt", o.dt},
               {"tol", o.tol},
               {"inner_tol", o.inner_tol},
               {"t_max", o.t_max},
               {"inner_budget", o.inner_budget ? json(*o.inner_budget) : json(nullptr)},
               {"trace_stride", o.trace_stride},
               {"balance_tol", o.balance_tol},
               {"epsilon", o.epsilon},
               {"max_iter", o.max_iter},
               {"relaxation", o.relaxation},
               {"mode", o.mode},
               {"schedule", o.schedule},
               {"seed", o.seed}};
  return {{"name", spec.name}, {"nodes", nodes}, {"edges", edges}, {"options", options}};
}

namespace {

ScenarioSpec paper_sec4() {
  ScenarioSpec s;
  s.name = "paper_sec4";
  const double xi[] = {10, 15, 12, 10, 10, 15};
  // Generation minima at k/31; with these the unconstrained optimum is
  // already balanced, so the printed dispatch is reproduced with lambda = 0.
  const double k[] = {412, 378, 550, 722, 257, 533};
  const double p_d[] = {5, 15, 20, 30, 2, 20};
  for (int i = 0; i < 6; ++i) {
    const GenCost c = params_from_minimum(xi[i], k[i] / 31.0, 0.0);
    NodeSpec n;
    n.id = i + 1;
    n.xi = c.xi;
    n.zeta = c.zeta;
    n.eta = c.eta;
    n.p_desired = p_d[i];
    n.p_generated = k[i] / 31.0;
    s.nodes.push_back(n);
  }
  const std::tuple<int, int, double> edges[] = {{1, 2, 5}, {2, 3, 7}, {3, 4, 3}, {1, 5, 4},
                                                {3, 5, 6}, {4, 5, 8}, {4, 6, 7}};
  for (const auto& [a, b, alpha] : edges) s.edges.push_back({a, b, alpha, 0.01, 0.0});
  s.options.tol = 1e-11;
  s.options.inner_tol = 1e-13;
  s.options.t_max = 1e5;
  s.options.relaxation = 0.0;
  s.options.max_iter = 500;
  return s;
}

ScenarioSpec two_node() {
  ScenarioSpec s;
  s.name = "two_node";
  s.nodes.push_back({1, 1.0, 0.0, 0.0, 0.0, std::nullopt, std::nullopt, 1.0});
  s.nodes.push_back({2, 1.0, 0.0, 0.0, 2.0, std::nullopt, std::nullopt, 1.0});
  s.edges.push_back({1, 2, 1.0, 0.0, 0.0});
  s.options.tol = 1e-12;
  s.options.inner_tol = 1e-14;
  s.options.t_max = 1e5;
  s.options.relaxation = 0.0;
  return s;
}

/// Uniform double in [0, 1) from the top 53 bits, so the stream is identical
/// on every standard library.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

}  // namespace

std::vector<std::string> bundled_scenario_names() { return {"paper_sec4", "two_node"}; }

std::optional<ScenarioSpec> bundled_scenario(const std::string& name) {
  if (name == "paper_sec4") return paper_sec4();
  if (name == "two_node") return two_node();
  return std::nullopt;
}

ScenarioSpec random_scenario(int nodes, std::uint64_t seed) {
  if (nodes < 1) throw ValidationError("random scenario needs at least one node");
  std::mt19937_64 rng(seed);
  ScenarioSpec s;
  s.name = "random_n" + std::to_string(nodes) + "_s" + std::to_string(seed);
  for (int i = 0; i < nodes; ++i) {
    NodeSpec n;
    n.id = i + 1;
    n.xi = uniform(rng, 0.5, 10.0);
    n.zeta = uniform(rng, -5.0, 5.0);
    n.p_desired = uniform(rng, 0.0, 20.0);
    s.nodes.push_back(n);
  }
  std::set<std::pair<int, int>> used;
  for (int i = 1; i < nodes; ++i) {
    const int parent = static_cast<int>(unit(rng) * i);
    used.emplace(parent, i);
  }
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (unit(rng) < 0.25) used.emplace(i, j);
    }
  }
  for (const auto& [a, b] : used) {
    s.edges.push_back({a + 1, b + 1, uniform(rng, 0.5, 10.0), uniform(rng, -1.0, 1.0), 0.0});
  }
  s.options.tol = 1e-11;
  s.options.inner_tol = 1e-13;
  s.options.t_max = 1e6;
  return s;
}

}  // namespace energynet
