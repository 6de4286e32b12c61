#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "censet/observation.hpp"

namespace censet {

enum class DiameterCondition { DisjointSupports, SinglePoint, Indeterminate };

const char* to_string(DiameterCondition condition) noexcept;

/// Identified set under normalized log-probability access.
/// For Indeterminate the diameter lies in [bracket_lower, bracket_upper] and
/// `diameter` holds the upper end.
struct NormalizedGeometry {
  double t_star = 0.0;
  double cap = 0.0;  // probability of the K-th revealed token
  std::size_t m = 0;
  double diameter = 0.0;
  double bracket_lower = 0.0;
  double bracket_upper = 0.0;
  DiameterCondition condition = DiameterCondition::SinglePoint;
};

/// Tokens needed to hold t* under cap c, i.e. ceil(t*/c) with a relative
/// guard against t*/c landing just above an integer through rounding.
std::size_t tokens_to_hold(double t_star, double cap);

NormalizedGeometry normalized_geometry(const TopKObservation& obs, std::size_t oracle_grid = 64);

/// Two tail allocations (length M) on disjoint supports, each summing to t*.
/// Throws Error(Domain) unless M >= 2 ceil(t*/c).
std::pair<std::vector<double>, std::vector<double>> disjoint_witness(double t_star, double cap,
                                                                     std::size_t m);

inline constexpr std::size_t kMaxAllocationOracleM = 12;

/// Max pairwise TV over gridded allocations: for each token in turn, the
/// other M - 1 entries range over {0, c/q, ..., c} and that token absorbs t*
/// minus their sum when it lands in [0, c].
/// q = min(grid, largest value with (q+1)^(M-1) <= budget).
double allocation_diameter_oracle(double t_star, double cap, std::size_t m, std::size_t grid,
                                  std::size_t budget = 50000);

}  // namespace censet
