#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "energynet/consensus.hpp"

namespace energynet {

/// Reports are plain JSON documents; keys are kept sorted so the text form is canonical.
using Report = nlohmann::json;

/// Canonical text: sorted keys, two-space indent, shortest round-trip doubles.
std::string serialize_report(const Report& report);
Report parse_report(const std::string& text);
Report load_report(const std::string& path);
void save_report(const std::string& path, const Report& report);

struct TraceRow {
  double t = 0.0;
  std::string variable;
  int id = 0;
  double value = 0.0;
};

class TraceLog {
 public:
  void add(double t, const std::string& variable, int id, double value) { rows_.push_back({t, variable, id, value}); }
  /// One row per component of every sample; ids[k] labels component k.
  void add_samples(const std::string& variable, const std::vector<TraceSample>& samples, const std::vector<int>& ids);

  const std::vector<TraceRow>& rows() const { return rows_; }
  /// CSV with header t,variable,id,value.
  std::string csv() const;
  void save(const std::string& path) const;

 private:
  std::vector<TraceRow> rows_;
};

struct FieldDiff {
  std::string field;  ///< dotted path with array indices removed
  double max_abs = 0.0;
  double max_rel = 0.0;
  bool within = true;
};

inline constexpr int kCompareOk = 0;
inline constexpr int kCompareShapeMismatch = 2;
inline constexpr int kCompareOutOfTolerance = 4;

struct Comparison {
  int exit_code = kCompareOk;
  std::vector<FieldDiff> fields;
  std::vector<std::string> mismatches;  ///< shape problems
  std::vector<std::string> notes;       ///< differing labels, reported but not judged

  std::string summary() const;
};

/// Field-by-field numeric comparison. Timing and convergence bookkeeping are
/// skipped; fields present in only one report are noted. Arrays of different
/// length or values of different type are a shape mismatch. A value is within tolerance when |a - b| <= tol * max(1, |a|, |b|).
Comparison compare_reports(const Report& a, const Report& b, double tol);

}  // namespace energynet
