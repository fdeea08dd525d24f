#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "energynet/cost_model.hpp"

namespace energynet {

struct NodeSpec {
  int id = 0;
  double xi = 1.0;
  double zeta = 0.0;
  double eta = 0.0;
  double p_desired = 0.0;
  std::optional<double> p_g_min;
  std::optional<double> p_g_max;
  std::optional<double> p_generated;  ///< inline generation input for the flow stage
};

/// Edge as written in the file; from/to are node ids. Costs refer to the
/// from -> to orientation.
struct EdgeSpec {
  int from = 0;
  int to = 0;
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct SolverSettings {
  double dt = 0.0;
  double tol = 1e-9;         ///< consensus and outer tolerance
  double inner_tol = 1e-12;  ///< two-scale inner tolerance
  double t_max = 1e4;
  std::optional<long> inner_budget;
  int trace_stride = 10;
  double balance_tol = 1e-6;
  std::vector<double> epsilon;  ///< recursive stop threshold per node; empty means default
  int max_iter = 100;
  double relaxation = 1.0;
  std::string mode = "matrix";
  std::string schedule = "natural";
  std::uint64_t seed = 0;
};

struct ScenarioSpec {
  std::string name;
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  SolverSettings options;

  /// Network with nodes in listed order. Throws ValidationError on any problem.
  EnergyNetwork network() const;
  Vector p_desired() const;
  /// Inline generation vector if every node carries one.
  std::optional<Vector> p_generated() const;
  int index_of(int id) const;
};

/// Every problem with the spec, including those found by cost-model validation.
std::vector<std::string> validate_spec(const ScenarioSpec& spec);

/// Strict conversion: unknown fields, wrong types and missing required fields
/// are all collected and thrown together as one ValidationError.
ScenarioSpec scenario_from_json(const nlohmann::json& doc);

/// Parses text; syntax errors report the line. `source` names the input in messages.
ScenarioSpec parse_scenario(const std::string& text, const std::string& source = "<input>");

/// Reads and validates a file, or a bundled scenario when `path` names one.
ScenarioSpec load_scenario(const std::string& path);

/// Full echo with every default filled in.
nlohmann::json to_json(const ScenarioSpec& spec);

std::vector<std::string> bundled_scenario_names();
std::optional<ScenarioSpec> bundled_scenario(const std::string& name);

/// Random connected instance: spanning tree plus extra edges, xi and alpha in
/// [0.5, 10], beta in [-1, 1]. The same (n, seed) always gives the same spec.
ScenarioSpec random_scenario(int nodes, std::uint64_t seed);

}  // namespace energynet
