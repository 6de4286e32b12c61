#include "censet/numeric_policy.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "censet/errors.hpp"

namespace censet {
namespace {

NumericPolicy& active_policy() noexcept {
  static NumericPolicy policy;
  return policy;
}

}  // namespace

const NumericPolicy& numeric_policy() noexcept { return active_policy(); }

void set_numeric_policy(const NumericPolicy& policy) noexcept { active_policy() = policy; }

NumericPolicy parse_numeric_policy(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("numeric policy: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "numeric policy: expected a JSON object");

  NumericPolicy policy;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) {
      throw Error(ErrorCode::Validation, "numeric policy: '" + key + "' must be a number");
    }
    const double v = value.get<double>();
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::Validation, "numeric policy: '" + key + "' must be finite and >= 0");
    }
    if (key == "head_mass_tol") policy.head_mass_tol = v;
    else if (key == "clamp_report_tol") policy.clamp_report_tol = v;
    else if (key == "membership_tol") policy.membership_tol = v;
    else if (key == "normalization_tol") policy.normalization_tol = v;
    else if (key == "golden_tol") policy.golden_tol = v;
    else if (key == "threshold_band") policy.threshold_band = v;
    else if (key == "infeasibility_tol") policy.infeasibility_tol = v;
    else throw Error(ErrorCode::Validation, "numeric policy: unknown key '" + key + "'");
  }
  return policy;
}

}  // namespace censet
