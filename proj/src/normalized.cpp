#include "censet/normalized.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "censet/errors.hpp"
#include "censet/log_math.hpp"
#include "censet/numeric_policy.hpp"

namespace censet {

const char* to_string(DiameterCondition condition) noexcept {
  switch (condition) {
    case DiameterCondition::DisjointSupports: return "DisjointSupports";
    case DiameterCondition::SinglePoint: return "SinglePoint";
    case DiameterCondition::Indeterminate: return "Indeterminate";
  }
  return "Unknown";
}

std::size_t tokens_to_hold(double t_star, double cap) {
  if (t_star <= 0.0) return 0;
  const double ratio = t_star / cap;
  return static_cast<std::size_t>(std::ceil(ratio - 1e-12 * std::max(1.0, ratio)));
}

namespace {

// Fill from the front and from the back; a feasible pair, so its TV is a
// certified lower bound on the diameter for any M.
double mirrored_fill_tv(double t_star, double cap, std::size_t m) {
  std::vector<double> a(m, 0.0), b(m, 0.0);
  double left = t_star;
  for (std::size_t i = 0; i < m && left > 0.0; ++i) {
    a[i] = std::min(cap, left);
    b[m - 1 - i] = a[i];
    left -= a[i];
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < m; ++i) l1 += std::abs(a[i] - b[i]);
  return 0.5 * l1;
}

}  // namespace

NormalizedGeometry normalized_geometry(const TopKObservation& obs, std::size_t oracle_grid) {
  if (obs.mode != AccessMode::NormalizedLogProbs) {
    throw Error(ErrorCode::Mode, "normalized geometry needs a logprobs observation");
  }
  NormalizedGeometry ng;
  ng.t_star = hidden_tail_mass(obs).value;
  ng.cap = std::exp(obs.tau());
  ng.m = obs.censored_count();

  const double room = static_cast<double>(ng.m) * ng.cap;
  if (ng.t_star > room + numeric_policy().infeasibility_tol) {
    throw Error(ErrorCode::Infeasible, "hidden tail mass " + std::to_string(ng.t_star) +
                                           " cannot fit under M * c = " + std::to_string(room));
  }
  if (ng.m <= 1 || ng.t_star == 0.0) {
    ng.condition = DiameterCondition::SinglePoint;
    return ng;
  }
  ng.bracket_upper = ng.t_star;
  ng.diameter = ng.t_star;
  if (ng.m >= 2 * tokens_to_hold(ng.t_star, ng.cap)) {
    ng.condition = DiameterCondition::DisjointSupports;
    ng.bracket_lower = ng.t_star;
    return ng;
  }
  ng.condition = DiameterCondition::Indeterminate;
  double lower = mirrored_fill_tv(ng.t_star, ng.cap, ng.m);
  if (ng.m <= kMaxAllocationOracleM) {
    lower = std::max(lower, allocation_diameter_oracle(ng.t_star, ng.cap, ng.m, oracle_grid));
  }
  ng.bracket_lower = std::min(lower, ng.t_star);
  return ng;
}

std::pair<std::vector<double>, std::vector<double>> disjoint_witness(double t_star, double cap,
                                                                     std::size_t m) {
  const std::size_t n = tokens_to_hold(t_star, cap);
  if (m < 2 * n) {
    throw Error(ErrorCode::Domain, "no disjoint-support witness: M=" + std::to_string(m) +
                                       " < 2 ceil(t*/c)=" + std::to_string(2 * n));
  }
  std::vector<double> a(m, 0.0), b(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = i + 1 < n ? cap : t_star - static_cast<double>(n - 1) * cap;
    a[i] = p;
    b[n + i] = p;
  }
  return {std::move(a), std::move(b)};
}

double allocation_diameter_oracle(double t_star, double cap, std::size_t m, std::size_t grid,
                                  std::size_t budget) {
  if (m > kMaxAllocationOracleM) {
    throw Error(ErrorCode::Domain, "allocation oracle refuses M=" + std::to_string(m));
  }
  const double tol = numeric_policy().infeasibility_tol;
  if (!(t_star >= 0.0) || !(cap > 0.0)) throw Error(ErrorCode::Domain, "need t* >= 0 and c > 0");
  if (t_star > static_cast<double>(m) * cap + tol) {
    throw Error(ErrorCode::Infeasible, "t* exceeds M * c");
  }
  if (m <= 1 || t_star == 0.0) return 0.0;

  std::size_t q = 1;
  auto fits = [&](std::size_t levels) {
    double n = 1.0;
    for (std::size_t j = 0; j + 1 < m; ++j) n *= static_cast<double>(levels);
    return n <= static_cast<double>(budget);
  };
  while (q < std::max<std::size_t>(grid, 1) && fits(q + 2)) ++q;

  const std::size_t n_subsets = std::size_t{1} << m;
  std::vector<double> best_hi(n_subsets, -kInf), best_lo(n_subsets, kInf), sums(n_subsets, 0.0);
  std::vector<double> a(m);
  bool any = false;
  // Each coordinate takes a turn absorbing the remainder, so a residual
  // below c can sit on any token.
  for (std::size_t free = 0; free < m; ++free) {
    std::vector<std::size_t> digit(m - 1, 0);
    for (;;) {
      double used = 0.0;
      for (std::size_t j = 0, d = 0; j < m; ++j) {
        if (j == free) continue;
        a[j] = cap * static_cast<double>(digit[d++]) / static_cast<double>(q);
        used += a[j];
      }
      const double last = t_star - used;
      if (last >= -tol && last <= cap + tol) {
        any = true;
        a[free] = std::clamp(last, 0.0, cap);
        for (std::size_t s = 1; s < n_subsets; ++s) {
          sums[s] = sums[s & (s - 1)] + a[static_cast<unsigned>(std::countr_zero(s))];
          best_hi[s] = std::max(best_hi[s], sums[s]);
          best_lo[s] = std::min(best_lo[s], sums[s]);
        }
      }
      std::size_t j = 0;
      while (j + 1 < m && ++digit[j] == q + 1) digit[j++] = 0;
      if (j + 1 == m) break;
    }
  }
  if (!any) return 0.0;
  double best = 0.0;
  for (std::size_t s = 1; s < n_subsets; ++s) best = std::max(best, best_hi[s] - best_lo[s]);
  return best;
}

}  // namespace censet
