#include "speclab/report.hpp"

#include <cmath>

namespace speclab {

VerificationReport VerificationReport::inequality(std::string check, double lhs, double rhs, double slack) {
  VerificationReport r;
  r.check = std::move(check);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.passed = lhs <= rhs + slack;
  return r;
}

VerificationReport VerificationReport::equality(std::string check, double lhs, double rhs, double tolerance) {
  VerificationReport r;
  r.check = std::move(check);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = tolerance - std::abs(lhs - rhs);
  r.passed = std::abs(lhs - rhs) <= tolerance;
  r.params["tolerance"] = tolerance;
  return r;
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["check"] = check;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["margin"] = margin;
  j["passed"] = passed;
  j["params"] = params;
  j["seed"] = seed;
  if (!note.empty()) j["note"] = note;
  return j;
}

}  // namespace speclab
