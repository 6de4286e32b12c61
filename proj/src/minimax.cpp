#include "censet/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "censet/detail/search.hpp"
#include "censet/errors.hpp"
#include "censet/log_math.hpp"
#include "censet/numeric_policy.hpp"

namespace censet {

using std::numbers::e;

BinaryReserve binary_reserve(double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw Error(ErrorCode::Domain, "binary_reserve needs U in [0, 1], got " + std::to_string(u));
  }
  if (u == 0.0) return {0.0, 0.0, true};
  if (u == 1.0) return {0.5, std::numbers::ln2, true};
  // s* = A / (1 + A) = sigmoid(log A), log A = log U + ((1 - U) / U) log(1 - U).
  const double log_a = std::log(u) + ((1.0 - u) / u) * std::log1p(-u);
  const double s = sigmoid(log_a);
  return {s, -std::log1p(-s), false};
}

BalancingResult balancing_oracle(double u, std::size_t grid) {
  if (!(u > 0.0 && u < 1.0)) {
    throw Error(ErrorCode::Domain, "balancing_oracle needs U in (0, 1)");
  }
  grid = std::max<std::size_t>(grid, 1000);
  const double log1m_u = std::log1p(-u);
  const double log_u = std::log(u);
  // Parametrize s = sigmoid(x) so tiny reserves get resolution.
  auto risk_at = [&](double x) {
    const double s = sigmoid(x);
    const double log1m_s = std::log1p(-s);
    const double zero_tail = -log1m_s;
    const double full_tail = (1.0 - u) * (log1m_u - log1m_s) + u * (log_u - std::log(s));
    return std::max(zero_tail, full_tail);
  };
  constexpr double lo = -40.0, hi = 20.0;
  const double step = (hi - lo) / static_cast<double>(grid - 1);
  std::size_t best = 0;
  double best_val = risk_at(lo);
  for (std::size_t i = 1; i < grid; ++i) {
    const double v = risk_at(lo + step * static_cast<double>(i));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
  const double b = lo + step * static_cast<double>(std::min(best + 1, grid - 1));
  auto [x, neg] = detail::golden_max([&](double x) { return -risk_at(x); }, a, b, 1e-13);
  if (-neg < best_val) return {sigmoid(x), -neg};
  return {sigmoid(lo + step * static_cast<double>(best)), best_val};
}

double g_envelope(double u, double t, double s) {
  if (!(u > 0.0 && u <= 1.0)) throw Error(ErrorCode::Domain, "g_envelope needs U in (0, 1]");
  if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::Domain, "g_envelope needs s in (0, 1)");
  const double tol = numeric_policy().membership_tol;
  if (!(t >= 0.0 && t <= u + tol)) throw Error(ErrorCode::Domain, "g_envelope needs t in [0, U]");
  if (t == 0.0) return -std::log1p(-s);
  if (u == 1.0 || t >= 1.0) return kInf;
  return std::log1p(-t) - (1.0 - t) * std::log1p(-s) +
         t * (std::log(u) - std::log1p(-u) - std::log(s));
}

EnvelopeMax g_max(double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorCode::Domain, "g_max needs U in (0, 1)");
  const double s = u / e;
  // G is concave in t; its stationary point solves 1/(1 - t) = log(1 - s) + C.
  const double c = 1.0 - std::log1p(-u);  // log(U / ((1 - U) s)) at s = U/e
  const double denom = std::log1p(-s) + c;
  EnvelopeMax best{g_envelope(u, 0.0, s), 0.0};
  auto consider = [&](double t) {
    const double g = g_envelope(u, t, s);
    if (g > best.g_max) best = {g, t};
  };
  consider(u);
  if (denom > 0.0) consider(std::clamp(1.0 - 1.0 / denom, 0.0, u));
  return best;
}

double second_order_coefficient() noexcept { return 1.0 / (2.0 * e) - 1.0 / (2.0 * e * e); }

MinimaxCertificate certify(double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorCode::Domain, "certify needs U in (0, 1)");
  const auto br = binary_reserve(u);
  const auto gm = g_max(u);
  return {u, br.s_star, br.r_bin, gm.g_max, gm.t_argmax, u / e, second_order_coefficient()};
}

EstimatorSpec symmetric_estimator(const SetGeometry& geom, std::optional<double> reserve) {
  EstimatorSpec est;
  if (geom.m() == 0) return est;
  if (reserve) {
    if (!(*reserve > 0.0 && *reserve < 1.0)) {
      throw Error(ErrorCode::Domain, "estimator reserve must lie in (0, 1)");
    }
    est.reserve = *reserve;
  } else {
    est.reserve = geom.uk / e;
  }
  return est;
}

std::vector<double> estimator_distribution(const SetGeometry& geom, const EstimatorSpec& est) {
  const auto& s = geom.summary;
  std::vector<double> q(s.vocab_size, 0.0);
  for (std::size_t i = 0; i < s.k(); ++i) {
    q[static_cast<std::size_t>(s.revealed_ids[i])] = (1.0 - est.reserve) * s.alpha[i];
  }
  if (s.m == 0) return q;
  const auto tail = censored_tokens(s);
  if (est.rule == TailRule::ReferenceWeighted && est.tail_weights.size() != tail.size()) {
    throw Error(ErrorCode::Structural, "estimator tail weights do not match censored tokens");
  }
  for (std::size_t j = 0; j < tail.size(); ++j) {
    const double w = est.rule == TailRule::Uniform ? 1.0 / static_cast<double>(s.m)
                                                   : est.tail_weights[j];
    q[static_cast<std::size_t>(tail[j])] = est.reserve * w;
  }
  return q;
}

namespace {

// lambda(t) = U (1 - t) / ((1 - U) t): the cap on M r_u for the tail
// conditional r. At least 1 for t <= U.
double cap_ratio(double uk, double one_minus_uk, double t) {
  return std::max(1.0, uk * (1.0 - t) / (one_minus_uk * t));
}

struct Concentration {
  std::size_t full = 0;   // tokens at the cap
  double level = 0.0;     // conditional weight per full token
  double residual = 0.0;  // conditional weight on one further token
};

Concentration concentrate(double lambda, std::size_t m) {
  const double md = static_cast<double>(m);
  if (lambda >= md) return {1, 1.0, 0.0};
  const double ratio = md / lambda;
  auto full = static_cast<std::size_t>(std::floor(ratio));
  full = std::min(full, m);
  const double level = lambda / md;
  double residual = 1.0 - static_cast<double>(full) * level;
  if (residual <= 1e-15 || full == m) residual = 0.0;
  return {full, level, residual};
}

void check_tail_mass(const SetGeometry& geom, double t) {
  const double tol = numeric_policy().membership_tol;
  if (!(t >= 0.0 && t <= geom.uk + tol)) {
    throw Error(ErrorCode::Domain, "adversary tail mass " + std::to_string(t) + " outside [0, U_K]");
  }
}

}  // namespace

double uniform_best_response_kl(double uk, double one_minus_uk, std::size_t m, double reserve,
                                double t) {
  if (t <= 0.0) return -std::log1p(-reserve);
  const auto c = concentrate(cap_ratio(uk, one_minus_uk, t), m);
  const double md = static_cast<double>(m);
  double tail_kl = static_cast<double>(c.full) * xlogx_over_y(c.level, 1.0 / md);
  tail_kl += xlogx_over_y(c.residual, 1.0 / md);
  return binary_kl(t, reserve) + t * tail_kl;
}

CappedVertex capped_vertex_search(std::span<const double> caps, std::span<const double> q,
                                  double mass) {
  const std::size_t n = caps.size();
  if (q.size() != n) throw Error(ErrorCode::Structural, "caps and estimator lengths differ");
  const double room = std::accumulate(caps.begin(), caps.end(), 0.0);
  if (mass > room * (1.0 + 1e-12) + numeric_policy().membership_tol) {
    throw Error(ErrorCode::Infeasible, "tail mass exceeds the sum of per-token caps");
  }

  CappedVertex best;
  best.value = -kInf;
  std::vector<std::size_t> order(n);
  auto try_order = [&](auto&& less) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), less);
    std::vector<double> alloc(n, 0.0);
    double left = mass;
    double value = 0.0;
    for (std::size_t i : order) {
      if (left <= 0.0) break;
      const double p = std::min(caps[i], left);
      alloc[i] = p;
      left -= p;
      value += xlogx_over_y(p, q[i]);
    }
    if (value > best.value) best = {std::move(alloc), value};
  };
  try_order([&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
  try_order([&](std::size_t a, std::size_t b) { return q[a] * caps[b] < q[b] * caps[a]; });
  try_order([&](std::size_t a, std::size_t b) { return caps[a] > caps[b]; });
  return best;
}

BestResponse adversary_best_response(const SetGeometry& geom, const EstimatorSpec& est, double t) {
  check_tail_mass(geom, t);
  BestResponse out;
  if (geom.m() == 0) return out;
  t = std::min(t, geom.uk);
  out.point.t = t;
  const auto tail = censored_tokens(geom.summary);

  if (est.rule == TailRule::Uniform) {
    out.kl = uniform_best_response_kl(geom.uk, geom.one_minus_uk(), geom.m(), est.reserve, t);
    if (t > 0.0) {
      const auto c = concentrate(cap_ratio(geom.uk, geom.one_minus_uk(), t), geom.m());
      for (std::size_t j = 0; j < c.full; ++j) out.point.tail.push_back({tail[j], t * c.level});
      if (c.residual > 0.0) out.point.tail.push_back({tail[c.full], t * c.residual});
    }
    return out;
  }

  if (est.tail_weights.size() != tail.size()) {
    throw Error(ErrorCode::Structural, "estimator tail weights do not match censored tokens");
  }
  const std::vector<double> caps(tail.size(), per_token_cap(geom, t));
  std::vector<double> q(tail.size());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = est.reserve * est.tail_weights[j];
  const auto v = capped_vertex_search(caps, q, t);
  for (std::size_t j = 0; j < tail.size(); ++j) {
    if (v.alloc[j] > 0.0) out.point.tail.push_back({tail[j], v.alloc[j]});
  }
  out.kl = xlogx_over_y(1.0 - t, 1.0 - est.reserve) + v.value;
  out.exact = std::adjacent_find(q.begin(), q.end(), std::not_equal_to<>()) == q.end();
  return out;
}

RiskResult worst_case_risk(const SetGeometry& geom, const EstimatorSpec& est, std::size_t t_grid) {
  if (geom.m() == 0 || geom.uk == 0.0) {
    return {-std::log1p(-est.reserve), 0.0, true};
  }
  const double tol = numeric_policy().golden_tol;
  t_grid = std::max<std::size_t>(t_grid, 100);
  if (est.rule == TailRule::Uniform) {
    const double uk = geom.uk, om = geom.one_minus_uk();
    auto f = [&](double t) { return uniform_best_response_kl(uk, om, geom.m(), est.reserve, t); };
    auto [t, v] = detail::grid_then_golden_max(f, uk, t_grid, tol);
    return {v, t, true};
  }
  bool exact = true;
  auto f = [&](double t) {
    const auto br = adversary_best_response(geom, est, t);
    exact = exact && br.exact;
    return br.kl;
  };
  auto [t, v] = detail::grid_then_golden_max(f, geom.uk, t_grid, tol);
  return {v, t, exact};
}

const char* to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Impossible: return "IMPOSSIBLE";
    case Verdict::Open: return "OPEN";
    case Verdict::Threshold: return "THRESHOLD";
  }
  return "UNKNOWN";
}

CriticalVerdict critical_verdict(std::size_t k, double uk, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::Domain, "delta must be positive");
  CriticalVerdict out;
  out.k = k;
  out.uk = uk;
  out.r_bin = binary_reserve(uk).r_bin;
  out.first_order_ok = uk <= e * delta;
  if (std::abs(out.r_bin - delta) <= numeric_policy().threshold_band) {
    out.verdict = Verdict::Threshold;
  } else if (out.r_bin > delta) {
    out.verdict = Verdict::Impossible;
  } else {
    out.verdict = Verdict::Open;
  }
  return out;
}

std::vector<CriticalVerdict> critical_k(std::span<const SetGeometry> sweep, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::Domain, "delta must be positive");
  std::vector<CriticalVerdict> out;
  out.reserve(sweep.size());
  for (const auto& g : sweep) {
    out.push_back(critical_verdict(g.summary.vocab_size - g.m(), g.uk, delta));
  }
  return out;
}

}  // namespace censet
