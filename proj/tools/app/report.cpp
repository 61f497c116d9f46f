#include "report.hpp"

#include "config.hpp"

namespace kreg::app {

using nlohmann::json;

double ComparisonReport::nrmse(const std::string& arm) const {
  for (const auto& a : arms)
    if (a.arm == arm) return a.nrmse;
  throw InvalidArgument("report has no arm '" + arm + "'");
}

bool ComparisonReport::has_arm(const std::string& arm) const {
  for (const auto& a : arms)
    if (a.arm == arm) return true;
  return false;
}

json to_json(const ComparisonReport& r) {
  json j;
  j["version"] = r.version;
  j["config"] = r.config;
  j["arms"] = json::array();
  for (const auto& a : r.arms)
    j["arms"].push_back({{"protocol", a.protocol}, {"method", a.method}, {"arm", a.arm}, {"nrmse", a.nrmse}});
  j["timings_ms"] = json::array();
  for (const auto& [stage, ms] : r.timings_ms) j["timings_ms"].push_back({{"stage", stage}, {"ms", ms}});
  return j;
}

ComparisonReport report_from_json(const json& j) {
  try {
    ComparisonReport r;
    r.version = j.at("version").get<std::string>();
    r.config = j.at("config");
    for (const auto& a : j.at("arms"))
      r.arms.push_back({a.at("protocol").get<std::string>(), a.at("method").get<std::string>(),
                        a.at("arm").get<std::string>(), a.at("nrmse").get<double>()});
    for (const auto& t : j.at("timings_ms"))
      r.timings_ms.emplace_back(t.at("stage").get<std::string>(), t.at("ms").get<double>());
    return r;
  } catch (const json::exception& e) {
    throw ConfigError("/", std::string("malformed report: ") + e.what());
  }
}

std::string numeric_fingerprint(const ComparisonReport& r) {
  json j = to_json(r);
  j.erase("timings_ms");
  return j.dump();
}

}  // namespace kreg::app
