#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "energynet/report.hpp"
#include "energynet/scenario.hpp"

namespace energynet {

enum class Algorithm { Gen, Flow, JointRecursive, JointTwoScale, OracleDecoupled, OracleJoint };
enum class ExecutionMode { Matrix, Message };

std::string_view to_string(Algorithm algorithm);
std::string_view to_string(ExecutionMode mode);
std::optional<Algorithm> parse_algorithm(std::string_view tag);
std::optional<ExecutionMode> parse_mode(std::string_view tag);

struct RunRequest {
  Algorithm algorithm = Algorithm::Gen;
  std::optional<ExecutionMode> mode;  ///< defaults to the scenario's mode
  std::optional<Vector> p_g;          ///< flow input overriding the scenario's p_generated
  bool trace = false;
};

struct RunOutcome {
  Report report;
  TraceLog trace;
};

/// Runs one algorithm on a scenario. Validation and precondition failures
/// throw ValidationError / PreconditionError, numerical failures NumericalError.
RunOutcome run(const ScenarioSpec& spec, const RunRequest& request);

/// The p_g array of a report, checked against the scenario's node count.
Vector generation_from_report(const Report& report, int node_count);

}  // namespace energynet
