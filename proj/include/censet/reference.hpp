#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "censet/minimax.hpp"

namespace censet {

/// Reference-model logits for one position. Either `dense` has length V, or
/// `sparse` lists explicit entries and `default_logit` covers the rest.
struct ReferenceLogits {
  std::vector<double> dense;
  std::unordered_map<TokenId, double> sparse;
  std::optional<double> default_logit;

  /// Throws Error(Coverage) when the token is neither listed nor defaulted.
  double at(TokenId token) const;
  bool covers(TokenId token) const;
};

struct ReferenceRecord {
  std::string position_id;
  ReferenceLogits logits;
};

/// {position_id, default: real | "-inf", entries: [{token, logit}]} or
/// {position_id, dense: [V reals]}, one record per line.
std::vector<ReferenceRecord> parse_reference_dump(std::istream& in);

/// Per-token ceilings log B_u = min(tau, z_ref(u) + rho) over censored tokens
/// and the shrunken diameter U_R = C_R / (Z_A + C_R).
struct ReferenceBound {
  double rho = 0.0;
  std::vector<TokenId> tokens;  // censored ids, ascending
  std::vector<double> log_b;    // aligned with tokens
  double log_cr = 0.0;
  double ur = 0.0;
  double log_odds = 0.0;  // log C_R - log Z_A

  double one_minus_ur() const;
  /// B_u / C_R, aligned with tokens.
  std::vector<double> beta() const;
};

ReferenceBound reference_geometry(const SetGeometry& geom, const ReferenceLogits& ref, double rho);

/// Head (1 - s) alpha; censored token u gets s B_u / C_R. Default s = U_R / e.
EstimatorSpec reference_estimator(const SetGeometry& geom, const ReferenceBound& rb,
                                  std::optional<double> reserve = {});

/// Caps under the reference ceiling: p_u <= (1 - t) B_u / Z_A.
std::vector<double> reference_caps(const SetGeometry& geom, const ReferenceBound& rb, double t);

/// Best vertex of the reference-constrained set at tail mass t. Reported as a
/// lower bound on the supremum unless the vertex search is exact.
BestResponse reference_best_response(const SetGeometry& geom, const ReferenceBound& rb,
                                     const EstimatorSpec& est, double t);

RiskResult reference_worst_case_risk(const SetGeometry& geom, const ReferenceBound& rb,
                                     const EstimatorSpec& est, std::size_t t_grid = 1000);

DiameterOracleResult reference_box_oracle(const SetGeometry& geom, const ReferenceBound& rb,
                                          std::size_t resolution,
                                          std::size_t point_budget = kDefaultOraclePointBudget);

struct RhoDiagnostics {
  std::size_t n = 0;
  double max = 0.0;
  double median = 0.0;
  std::vector<std::pair<double, double>> quantiles;   // (level, value)
  std::vector<std::pair<double, double>> compliance;  // (rho, fraction with diff <= rho)
  std::string label;
};

inline constexpr const char* kRhoDiagnosticLabel =
    "structural prior diagnostic - not a guarantee for censored tokens";

/// Distribution of z_T(v) - z_ref(v) over revealed tokens. With
/// `anchor` set, every difference is shifted so the anchor pair has
/// difference 0.
RhoDiagnostics calibrate_rho(std::span<const std::pair<double, double>> pairs,
                             std::span<const double> candidate_rhos,
                             std::optional<std::size_t> anchor = {});

}  // namespace censet
