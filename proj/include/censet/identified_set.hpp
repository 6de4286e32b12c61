#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "censet/observation.hpp"

namespace censet {

/// TV diameter of the identified set together with its log-odds, so both
/// U_K and 1 - U_K are available at full relative precision.
struct SetGeometry {
  LogSummary summary;
  double uk = 0.0;
  double log_odds = 0.0;  // log M + tau - log Z_A; -inf when M = 0

  std::size_t m() const noexcept { return summary.m; }
  double one_minus_uk() const;
};

SetGeometry geometry(const LogSummary& summary);
SetGeometry geometry(const TopKObservation& obs);

/// Largest probability a censored token can carry at tail mass t.
double per_token_cap(const SetGeometry& geom, double t);

struct TailEntry {
  TokenId token = 0;
  double prob = 0.0;
};

/// A member of the identified set. Head probabilities are (1 - t) alpha and
/// are not stored. A uniform tail (t / M on every censored token) is kept
/// symbolically because M can be ~1e5.
struct FeasiblePoint {
  double t = 0.0;
  std::vector<TailEntry> tail;
  bool uniform_tail = false;

  static FeasiblePoint zero_tail() { return {}; }
  static FeasiblePoint uniform(double t) { return {t, {}, true}; }
};

/// Sparse tail entries; materializes the uniform form on demand.
std::vector<TailEntry> materialize_tail(const SetGeometry& geom, const FeasiblePoint& point);

/// Full length-V distribution indexed by token id.
std::vector<double> to_distribution(const SetGeometry& geom, const FeasiblePoint& point);

/// Zero-tail point and maximal uniform-tail point; TV between them is U_K.
std::pair<FeasiblePoint, FeasiblePoint> extremal_pair(const SetGeometry& geom);

struct MembershipReport {
  bool member = true;
  std::vector<std::string> violations;
};

MembershipReport membership(const SetGeometry& geom, const FeasiblePoint& point);

double tv(std::span<const double> p, std::span<const double> q);
/// Extended KL in nats: 0 log 0 = 0, and +inf when p > 0 where q = 0.
double kl(std::span<const double> p, std::span<const double> q);

struct DiameterOracleResult {
  double diameter = 0.0;      // max pairwise TV over the grid
  double extremal_tv = 0.0;   // TV of the zero-tail / all-at-ceiling pair
  std::size_t levels_per_token = 0;
  std::size_t grid_points = 0;
};

inline constexpr std::size_t kMaxOracleVocab = 12;
inline constexpr std::size_t kDefaultOraclePointBudget = 20000;

/// Brute-force diameter of {head weights fixed, 0 <= y_u <= exp(upper_log[u])}.
/// Each censored weight takes `levels` evenly spaced values including both
/// box ends, where levels = min(resolution + 1, floor(budget^(1/M))), at
/// least 2. Pairwise TV is maximized through TV(p, q) = max_S p(S) - q(S).
DiameterOracleResult box_diameter_oracle(std::span<const double> head_scores,
                                         std::span<const double> upper_log,
                                         std::size_t resolution,
                                         std::size_t point_budget = kDefaultOraclePointBudget);

DiameterOracleResult brute_diameter_oracle(const SetGeometry& geom, std::size_t resolution,
                                           std::size_t point_budget = kDefaultOraclePointBudget);

}  // namespace censet
