#pragma once

#include "twistguide/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace twg {

/// Outcome of one verification check.
struct CheckResult
{
  std::string id;
  std::string type;
  std::string title;
  std::string part; // the claim being checked, for the pass/fail matrix
  std::string status = "fail"; // "pass", "fail" or "skipped"
  std::string message;
  json metrics = json::object();
  double seconds = 0.0;
  double time_limit = 0.0; // 0: unlimited

  bool passed() const { return status == "pass"; }
};

/// Check types understood by run_check.
const std::vector<std::string>& check_types();

/// Runs one check described by a JSON object with at least "type"; the
/// remaining keys are its parameters and thresholds (defaults apply to any
/// key left out). Numerical thresholds failing gives status "fail"; a fit
/// without enough growth gives "skipped".
CheckResult run_check(const json& params, std::ostream* log = nullptr);

/// Runs the "checks" array of a verify block.
std::vector<CheckResult> run_checks(const json& verify, std::ostream* log = nullptr);

/// One line: "[PASS] id title (seconds / limit)" plus the message, if any.
std::string format_check_line(const CheckResult& r);

json to_json(const CheckResult& r);

} // namespace twg
