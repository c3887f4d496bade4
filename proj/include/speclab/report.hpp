#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace speclab {

/// Outcome of one inequality or identity check: lhs <= rhs (or lhs == rhs
/// within a stated tolerance), with margin = rhs - lhs.
struct VerificationReport {
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool passed = false;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string note;

  /// Builds a report for lhs <= rhs + slack.
  static VerificationReport inequality(std::string check, double lhs, double rhs, double slack = 0.0);
  /// Builds a report for |lhs - rhs| <= tolerance.
  static VerificationReport equality(std::string check, double lhs, double rhs, double tolerance);

  nlohmann::json to_json() const;
};

}  // namespace speclab
