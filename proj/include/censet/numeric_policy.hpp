#pragma once

#include <string_view>

namespace censet {

/// Tolerances shared by every module. There is exactly one active record per
/// process; install overrides before starting any parallel work.
struct NumericPolicy {
  /// Admissible excess of normalized head mass over 1 (absolute).
  double head_mass_tol = 1e-9;
  /// Hidden tail mass below -clamp_report_tol is reported when clamped.
  double clamp_report_tol = 1e-9;
  /// Slack on tail mass and per-token caps in membership checks.
  double membership_tol = 1e-12;
  /// Distributions passed to tv()/kl() must sum to 1 within this.
  double normalization_tol = 1e-9;
  /// Interval width at which golden-section refinement stops.
  double golden_tol = 1e-10;
  /// |R_bin - delta| at or below this yields a threshold verdict.
  double threshold_band = 1e-3;
  /// Normalized access: t* <= M c + infeasibility_tol.
  double infeasibility_tol = 1e-9;
};

const NumericPolicy& numeric_policy() noexcept;
void set_numeric_policy(const NumericPolicy& policy) noexcept;

/// Parses a JSON object whose keys are a subset of the field names above.
/// Unknown keys are rejected.
NumericPolicy parse_numeric_policy(std::string_view json_text);

}  // namespace censet
