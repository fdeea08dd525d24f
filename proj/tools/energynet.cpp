#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "energynet/errors.hpp"
#include "energynet/report.hpp"
#include "energynet/runner.hpp"
#include "energynet/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

int report_error(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

void print_violations(const energynet::ValidationError& e) {
  std::cerr << "invalid:\n";
  for (const std::string& v : e.violations()) std::cerr << "  - " << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace energynet;

  CLI::App app{"Distributed generation and flow coordination on energy networks"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string algorithm_tag;
  std::string mode_tag;
  std::string out_path;
  std::string trace_path;
  std::string pg_from;
  auto* run_cmd = app.add_subcommand("run", "Run one algorithm on a scenario");
  run_cmd->add_option("--scenario", scenario_path, "Scenario file or bundled name")->required();
  run_cmd->add_option("--algorithm", algorithm_tag,
                      "gen | flow | joint-recursive | joint-twoscale | oracle-decoupled | oracle-joint")
      ->required();
  run_cmd->add_option("--mode", mode_tag, "matrix | message (default: from the scenario)");
  run_cmd->add_option("--out", out_path, "Report path (default: stdout)");
  run_cmd->add_option("--trace", trace_path, "Trace CSV path");
  run_cmd->add_option("--pg-from", pg_from, "Report whose p_g feeds the flow stage");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario and echo it with defaults");
  validate_cmd->add_option("--scenario", validate_path, "Scenario file or bundled name")->required();

  std::string report_a;
  std::string report_b;
  double tol = 1e-9;
  auto* compare_cmd = app.add_subcommand("compare", "Compare two reports field by field");
  compare_cmd->add_option("--a", report_a, "First report")->required();
  compare_cmd->add_option("--b", report_b, "Second report")->required();
  compare_cmd->add_option("--tol", tol, "Tolerance")->check(CLI::NonNegativeNumber);

  int gen_nodes = 6;
  std::uint64_t gen_seed = 0;
  std::string bundled;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-scenario", "Write a random or bundled scenario");
  auto* nodes_opt = gen_cmd->add_option("--nodes", gen_nodes, "Node count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "Random seed");
  gen_cmd->add_option("--bundled", bundled, "Name of a bundled scenario")->excludes(nodes_opt);
  gen_cmd->add_option("--out", gen_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) {
      const auto algorithm = parse_algorithm(algorithm_tag);
      if (!algorithm) {
        std::cerr << "error: unknown algorithm '" << algorithm_tag << "'\n";
        return kExitUsage;
      }
      RunRequest request;
      request.algorithm = *algorithm;
      if (!mode_tag.empty()) {
        request.mode = parse_mode(mode_tag);
        if (!request.mode) {
          std::cerr << "error: unknown mode '" << mode_tag << "'\n";
          return kExitUsage;
        }
      }
      const ScenarioSpec spec = load_scenario(scenario_path);
      if (!pg_from.empty()) {
        request.p_g = generation_from_report(load_report(pg_from), static_cast<int>(spec.nodes.size()));
      }
      request.trace = !trace_path.empty();
      const RunOutcome outcome = run(spec, request);
      if (out_path.empty()) {
        std::cout << serialize_report(outcome.report);
      } else {
        save_report(out_path, outcome.report);
      }
      if (request.trace) outcome.trace.save(trace_path);
      return kExitOk;
    }
    if (*validate_cmd) {
      const ScenarioSpec spec = load_scenario(validate_path);
      std::cout << to_json(spec).dump(2) << '\n';
      return kExitOk;
    }
    if (*compare_cmd) {
      const Comparison c = compare_reports(load_report(report_a), load_report(report_b), tol);
      std::cout << c.summary();
      return c.exit_code;
    }
    if (*gen_cmd) {
      ScenarioSpec spec;
      if (!bundled.empty()) {
        auto found = bundled_scenario(bundled);
        if (!found) {
          std::cerr << "error: no bundled scenario named '" << bundled << "'\n";
          return kExitUsage;
        }
        spec = *found;
      } else {
        spec = random_scenario(gen_nodes, gen_seed);
      }
      const std::string text = to_json(spec).dump(2) + "\n";
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(gen_out);
        if (!out) throw Error("cannot write " + gen_out);
        out << text;
      }
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    print_violations(e);
    return kExitInvalid;
  } catch (const PreconditionError& e) {
    return report_error(e, kExitInvalid);
  } catch (const NumericalError& e) {
    return report_error(e, kExitNumerical);
  } catch (const Error& e) {
    return report_error(e, kExitInvalid);
  }
  return kExitUsage;
}
