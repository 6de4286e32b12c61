#include "censet/identified_set.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>

#include "censet/errors.hpp"
#include "censet/log_math.hpp"
#include "censet/numeric_policy.hpp"

namespace censet {

double SetGeometry::one_minus_uk() const { return m() == 0 ? 1.0 : sigmoid(-log_odds); }

SetGeometry geometry(const LogSummary& summary) {
  SetGeometry g;
  g.summary = summary;
  if (summary.m == 0) {
    g.uk = 0.0;
    g.log_odds = -kInf;
    return g;
  }
  g.log_odds = std::log(static_cast<double>(summary.m)) + summary.tau - summary.log_za;
  g.uk = sigmoid(g.log_odds);
  return g;
}

SetGeometry geometry(const TopKObservation& obs) { return geometry(summarize(obs)); }

namespace {

// exp(tau) / Z_A * (1 - t) == (1 - t) U_K / (M (1 - U_K)).
double cap_unchecked(const SetGeometry& geom, double t) {
  return std::exp(geom.summary.tau - geom.summary.log_za) * (1.0 - t);
}

double cap_slack(double cap) { return numeric_policy().membership_tol * std::max(1.0, cap); }

}  // namespace

double per_token_cap(const SetGeometry& geom, double t) {
  if (geom.m() == 0) throw Error(ErrorCode::Domain, "per-token cap undefined: no censored tokens");
  const double tol = numeric_policy().membership_tol;
  if (!(t >= -tol && t <= geom.uk + tol)) {
    throw Error(ErrorCode::Domain, "tail mass " + std::to_string(t) + " outside [0, U_K]");
  }
  return cap_unchecked(geom, std::clamp(t, 0.0, 1.0));
}

std::vector<TailEntry> materialize_tail(const SetGeometry& geom, const FeasiblePoint& point) {
  if (!point.uniform_tail) return point.tail;
  std::vector<TailEntry> out;
  if (geom.m() == 0) return out;
  const double w = point.t / static_cast<double>(geom.m());
  for (TokenId id : censored_tokens(geom.summary)) out.push_back({id, w});
  return out;
}

std::vector<double> to_distribution(const SetGeometry& geom, const FeasiblePoint& point) {
  std::vector<double> p(geom.summary.vocab_size, 0.0);
  const auto& s = geom.summary;
  for (std::size_t i = 0; i < s.k(); ++i) {
    p[static_cast<std::size_t>(s.revealed_ids[i])] = (1.0 - point.t) * s.alpha[i];
  }
  for (const auto& e : materialize_tail(geom, point)) {
    if (e.token < 0 || static_cast<std::size_t>(e.token) >= p.size()) {
      throw Error(ErrorCode::Structural, "tail token " + std::to_string(e.token) + " out of range");
    }
    p[static_cast<std::size_t>(e.token)] += e.prob;
  }
  return p;
}

std::pair<FeasiblePoint, FeasiblePoint> extremal_pair(const SetGeometry& geom) {
  if (geom.m() == 0) {
    throw Error(ErrorCode::Degenerate, "identified set is a single point (M = 0)");
  }
  return {FeasiblePoint::zero_tail(), FeasiblePoint::uniform(geom.uk)};
}

MembershipReport membership(const SetGeometry& geom, const FeasiblePoint& point) {
  MembershipReport report;
  const double tol = numeric_policy().membership_tol;
  auto fail = [&](std::string msg) {
    report.member = false;
    report.violations.push_back(std::move(msg));
  };

  if (!std::isfinite(point.t)) {
    fail("tail mass is not finite");
    return report;
  }
  if (point.t < -tol) fail("tail mass is negative");
  if (point.t > geom.uk + tol) fail("tail mass exceeds U_K");
  if (geom.m() == 0) {
    if (point.t > tol || !point.tail.empty()) fail("no censored tokens but tail is non-empty");
    return report;
  }

  const double cap = cap_unchecked(geom, std::clamp(point.t, 0.0, 1.0));
  if (point.uniform_tail) {
    const double w = point.t / static_cast<double>(geom.m());
    if (w > cap + cap_slack(cap)) fail("uniform tail weight exceeds per-token cap");
    return report;
  }

  const std::unordered_set<TokenId> revealed(geom.summary.revealed_ids.begin(),
                                             geom.summary.revealed_ids.end());
  std::unordered_set<TokenId> seen;
  double total = 0.0;
  for (const auto& e : point.tail) {
    if (revealed.count(e.token)) {
      throw Error(ErrorCode::Structural,
                  "tail entry on revealed token " + std::to_string(e.token));
    }
    if (e.token < 0 || static_cast<std::size_t>(e.token) >= geom.summary.vocab_size) {
      throw Error(ErrorCode::Structural, "tail token " + std::to_string(e.token) + " out of range");
    }
    if (!seen.insert(e.token).second) fail("duplicate tail token " + std::to_string(e.token));
    if (e.prob < 0.0) fail("negative tail probability on token " + std::to_string(e.token));
    if (e.prob > cap + cap_slack(cap)) {
      fail("tail entry for token " + std::to_string(e.token) + " exceeds per-token cap");
    }
    total += e.prob;
  }
  const double sum_slack = tol * static_cast<double>(std::max<std::size_t>(1, point.tail.size()));
  if (std::abs(total - point.t) > sum_slack) fail("tail entries do not sum to t");
  return report;
}

namespace {

void check_distribution_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::Domain, "distribution lengths differ: " + std::to_string(p.size()) +
                                       " vs " + std::to_string(q.size()));
  }
  const double tol = numeric_policy().normalization_tol;
  for (auto d : {p, q}) {
    double sum = 0.0;
    for (double x : d) {
      if (!(x >= 0.0)) throw Error(ErrorCode::Domain, "distribution has a negative or NaN entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw Error(ErrorCode::Domain, "distribution sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

double tv(std::span<const double> p, std::span<const double> q) {
  check_distribution_pair(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

double kl(std::span<const double> p, std::span<const double> q) {
  check_distribution_pair(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(acc, 0.0);
}

DiameterOracleResult box_diameter_oracle(std::span<const double> head_scores,
                                         std::span<const double> upper_log,
                                         std::size_t resolution, std::size_t point_budget) {
  const std::size_t k = head_scores.size();
  const std::size_t m = upper_log.size();
  const std::size_t v = k + m;
  if (k == 0) throw Error(ErrorCode::Domain, "oracle needs at least one head token");
  if (v > kMaxOracleVocab) {
    throw Error(ErrorCode::Domain, "oracle refuses V=" + std::to_string(v) + " > " +
                                       std::to_string(kMaxOracleVocab));
  }
  if (resolution == 0) throw Error(ErrorCode::Domain, "oracle resolution must be positive");

  DiameterOracleResult out;
  if (m == 0) {
    out.grid_points = 1;
    out.levels_per_token = 1;
    return out;
  }

  double hi = *std::max_element(head_scores.begin(), head_scores.end());
  for (double u : upper_log) {
    if (std::isfinite(u)) hi = std::max(hi, u);
  }
  std::vector<double> head(k), box(m);
  double z_head = 0.0;
  for (std::size_t i = 0; i < k; ++i) z_head += head[i] = std::exp(head_scores[i] - hi);
  for (std::size_t j = 0; j < m; ++j) box[j] = std::exp(upper_log[j] - hi);

  std::size_t levels = 2;
  auto fits = [&](std::size_t l) {
    double n = 1.0;
    for (std::size_t j = 0; j < m; ++j) n *= static_cast<double>(l);
    return n <= static_cast<double>(point_budget);
  };
  while (levels < resolution + 1 && fits(levels + 1)) ++levels;
  out.levels_per_token = levels;

  const std::size_t n_subsets = std::size_t{1} << v;
  std::vector<double> best_hi(n_subsets, -kInf), best_lo(n_subsets, kInf), sums(n_subsets, 0.0);
  std::vector<std::size_t> digit(m, 0);
  std::vector<double> p(v);

  for (;;) {
    double total = z_head;
    for (std::size_t j = 0; j < m; ++j) {
      const double y = box[j] * static_cast<double>(digit[j]) / static_cast<double>(levels - 1);
      p[k + j] = y;
      total += y;
    }
    for (std::size_t i = 0; i < k; ++i) p[i] = head[i] / total;
    for (std::size_t j = 0; j < m; ++j) p[k + j] /= total;

    for (std::size_t s = 1; s < n_subsets; ++s) {
      const auto low = static_cast<unsigned>(std::countr_zero(s));
      sums[s] = sums[s & (s - 1)] + p[low];
      best_hi[s] = std::max(best_hi[s], sums[s]);
      best_lo[s] = std::min(best_lo[s], sums[s]);
    }
    ++out.grid_points;

    std::size_t j = 0;
    while (j < m && ++digit[j] == levels) digit[j++] = 0;
    if (j == m) break;
  }

  for (std::size_t s = 1; s < n_subsets; ++s) {
    out.diameter = std::max(out.diameter, best_hi[s] - best_lo[s]);
  }

  // Zero-tail point against every weight at its ceiling.
  double z_full = z_head;
  for (double b : box) z_full += b;
  double l1 = 0.0;
  for (std::size_t i = 0; i < k; ++i) l1 += std::abs(head[i] / z_head - head[i] / z_full);
  for (double b : box) l1 += b / z_full;
  out.extremal_tv = 0.5 * l1;
  return out;
}

DiameterOracleResult brute_diameter_oracle(const SetGeometry& geom, std::size_t resolution,
                                           std::size_t point_budget) {
  const std::vector<double> upper(geom.m(), geom.summary.tau);
  return box_diameter_oracle(geom.summary.scores, upper, resolution, point_budget);
}

}  // namespace censet
