#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace kreg::app {

/// One reconstruction arm scored against the reference scan.
struct ArmResult {
  std::string protocol;
  std::string method;  ///< none | ireg | kreg
  std::string arm;     ///< retest | noreg | ireg | kreg
  double nrmse = 0.0;

  friend bool operator==(const ArmResult&, const ArmResult&) = default;
};

struct ComparisonReport {
  std::string version;
  nlohmann::json config;
  std::vector<ArmResult> arms;
  /// Stage name and wall-clock milliseconds, in execution order.
  std::vector<std::pair<std::string, double>> timings_ms;

  /// NRMSE of the first arm with this label; throws if absent.
  double nrmse(const std::string& arm) const;
  bool has_arm(const std::string& arm) const;

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

nlohmann::json to_json(const ComparisonReport& r);
ComparisonReport report_from_json(const nlohmann::json& j);

/// Report with timings removed, serialized; identical for identical inputs.
std::string numeric_fingerprint(const ComparisonReport& r);

}  // namespace kreg::app
