#include "energynet/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet {

using nlohmann::json;

std::string serialize_report(const Report& report) { return report.dump(2) + "\n"; }

Report parse_report(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("report is not valid JSON: ") + e.what());
  }
}

Report load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read report " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_report(buffer.str());
}

void save_report(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << serialize_report(report);
}

void TraceLog::add_samples(const std::string& variable, const std::vector<TraceSample>& samples,
                           const std::vector<int>& ids) {
  for (const TraceSample& s : samples) {
    for (Eigen::Index k = 0; k < s.state.size(); ++k) {
      add(s.t, variable, ids.at(static_cast<std::size_t>(k)), s.state(k));
    }
  }
}

std::string TraceLog::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "t,variable,id,value\n";
  for (const TraceRow& r : rows_) out << r.t << ',' << r.variable << ',' << r.id << ',' << r.value << '\n';
  return out.str();
}

void TraceLog::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << csv();
}

namespace {

struct Walker {
  double tol = 0.0;
  Comparison result;
  std::map<std::string, FieldDiff> fields;

  void walk(const json& a, const json& b, const std::string& path, const std::string& field) {
    if (a.is_number() && b.is_number()) {
      const double x = a.get<double>();
      const double y = b.get<double>();
      const double abs = std::abs(x - y);
      const double scale = std::max({1.0, std::abs(x), std::abs(y)});
      const double rel = abs == 0.0 ? 0.0 : abs / std::max(std::abs(x), std::abs(y));
      FieldDiff& f = fields[field];
      f.field = field;
      f.max_abs = std::max(f.max_abs, abs);
      f.max_rel = std::max(f.max_rel, rel);
      if (!(abs <= tol * scale)) f.within = false;
      return;
    }
    if (a.is_null() || b.is_null()) {
      if (a != b) result.notes.push_back(path + ": " + a.dump() + " vs " + b.dump());
      return;
    }
    if (a.type() != b.type()) {
      result.mismatches.push_back(path + ": " + a.type_name() + " vs " + b.type_name());
      return;
    }
    if (a.is_object()) {
      for (const auto& [key, value] : a.items()) {
        if (path.empty() && (key == "timing" || key == "convergence")) continue;
        const std::string sub = path.empty() ? key : path + "." + key;
        if (!b.contains(key)) {
          result.notes.push_back(sub + ": only in first report");
          continue;
        }
        walk(value, b.at(key), sub, field.empty() ? key : field + "." + key);
      }
      for (const auto& [key, value] : b.items()) {
        if (path.empty() && (key == "timing" || key == "convergence")) continue;
        if (!a.contains(key)) result.notes.push_back((path.empty() ? key : path + "." + key) + ": only in second report");
      }
      return;
    }
    if (a.is_array()) {
      if (a.size() != b.size()) {
        result.mismatches.push_back(path + ": length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
        return;
      }
      for (std::size_t k = 0; k < a.size(); ++k) walk(a[k], b[k], path + "[" + std::to_string(k) + "]", field);
      return;
    }
    if (a != b) result.notes.push_back(path + ": " + a.dump() + " vs " + b.dump());
  }
};

}  // namespace

Comparison compare_reports(const Report& a, const Report& b, double tol) {
  Walker w;
  w.tol = tol;
  w.walk(a, b, "", "");
  for (auto& [name, f] : w.fields) w.result.fields.push_back(f);
  Comparison& c = w.result;
  if (!c.mismatches.empty()) {
    c.exit_code = kCompareShapeMismatch;
  } else if (std::any_of(c.fields.begin(), c.fields.end(), [](const FieldDiff& f) { return !f.within; })) {
    c.exit_code = kCompareOutOfTolerance;
  }
  return c;
}

std::string Comparison::summary() const {
  std::ostringstream out;
  out.precision(6);
  for (const std::string& m : mismatches) out << "shape mismatch: " << m << '\n';
  for (const std::string& n : notes) out << "differs: " << n << '\n';
  for (const FieldDiff& f : fields) {
    out << (f.within ? "ok   " : "DIFF ") << f.field << "  max_abs=" << f.max_abs << "  max_rel=" << f.max_rel << '\n';
  }
  out << (exit_code == kCompareOk ? "reports agree" : exit_code == kCompareShapeMismatch ? "reports differ in shape"
                                                                                        : "reports differ")
      << '\n';
  return out.str();
}

}  // namespace energynet
