#include "censet/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <json.hpp>

#include "censet/detail/search.hpp"
#include "censet/errors.hpp"
#include "censet/log_math.hpp"
#include "censet/numeric_policy.hpp"

namespace censet {

bool ReferenceLogits::covers(TokenId token) const {
  if (!dense.empty()) return token >= 0 && static_cast<std::size_t>(token) < dense.size();
  return sparse.count(token) > 0 || default_logit.has_value();
}

double ReferenceLogits::at(TokenId token) const {
  if (!dense.empty()) {
    if (token < 0 || static_cast<std::size_t>(token) >= dense.size()) {
      throw Error(ErrorCode::Coverage, "dense reference has no entry for token " + std::to_string(token));
    }
    return dense[static_cast<std::size_t>(token)];
  }
  if (auto it = sparse.find(token); it != sparse.end()) return it->second;
  if (default_logit) return *default_logit;
  throw Error(ErrorCode::Coverage,
              "reference has no logit for token " + std::to_string(token) + " and no default");
}

namespace {

double read_logit(const nlohmann::json& v, std::size_t line) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "-inf") return -kInf;
  throw ParseError(ErrorCode::Parse, line, "reference logit must be a number or \"-inf\"");
}

}  // namespace

std::vector<ReferenceRecord> parse_reference_dump(std::istream& in) {
  std::vector<ReferenceRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ErrorCode::Parse, line, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError(ErrorCode::Parse, line, "record is not a JSON object");

    ReferenceRecord rec;
    if (auto it = doc.find("position_id"); it != doc.end()) {
      if (!it->is_string()) throw ParseError(ErrorCode::Parse, line, "position_id must be a string");
      rec.position_id = it->get<std::string>();
    }
    const bool has_dense = doc.contains("dense");
    const bool has_entries = doc.contains("entries");
    if (has_dense == has_entries) {
      throw ParseError(ErrorCode::Parse, line, "record needs exactly one of 'dense' or 'entries'");
    }
    if (has_dense) {
      const auto& d = doc["dense"];
      if (!d.is_array() || d.empty()) throw ParseError(ErrorCode::Parse, line, "'dense' must be a non-empty array");
      for (const auto& v : d) rec.logits.dense.push_back(read_logit(v, line));
    } else {
      const auto& entries = doc["entries"];
      if (!entries.is_array()) throw ParseError(ErrorCode::Parse, line, "'entries' must be an array");
      for (const auto& e : entries) {
        if (!e.is_object() || !e.contains("token") || !e.contains("logit") ||
            !e["token"].is_number_integer()) {
          throw ParseError(ErrorCode::Parse, line, "entries need integer 'token' and 'logit'");
        }
        const auto token = e["token"].get<TokenId>();
        if (!rec.logits.sparse.emplace(token, read_logit(e["logit"], line)).second) {
          throw ParseError(ErrorCode::Validation, line, "duplicate reference token " + std::to_string(token));
        }
      }
      if (auto it = doc.find("default"); it != doc.end()) rec.logits.default_logit = read_logit(*it, line);
    }
    for (double v : rec.logits.dense) {
      if (std::isnan(v) || v == kInf) throw ParseError(ErrorCode::Validation, line, "reference logit is NaN or +inf");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

double ReferenceBound::one_minus_ur() const { return sigmoid(-log_odds); }

std::vector<double> ReferenceBound::beta() const {
  std::vector<double> out(log_b.size());
  if (log_cr == -kInf) {
    std::fill(out.begin(), out.end(), out.empty() ? 0.0 : 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (std::size_t i = 0; i < log_b.size(); ++i) out[i] = std::exp(log_b[i] - log_cr);
  return out;
}

ReferenceBound reference_geometry(const SetGeometry& geom, const ReferenceLogits& ref, double rho) {
  if (!(rho >= 0.0)) throw Error(ErrorCode::Domain, "rho must be >= 0");
  const auto& s = geom.summary;
  if (!ref.dense.empty() && ref.dense.size() != s.vocab_size) {
    throw Error(ErrorCode::Coverage, "dense reference has length " + std::to_string(ref.dense.size()) +
                                         ", expected V=" + std::to_string(s.vocab_size));
  }
  ReferenceBound rb;
  rb.rho = rho;
  rb.tokens = censored_tokens(s);
  rb.log_b.reserve(rb.tokens.size());
  for (TokenId u : rb.tokens) {
    const double z = ref.at(u);
    if (std::isnan(z) || z == kInf) throw Error(ErrorCode::Domain, "reference logit is NaN or +inf");
    rb.log_b.push_back(z == -kInf ? -kInf : std::min(s.tau, z + rho));
  }
  rb.log_cr = log_sum_exp(rb.log_b);
  rb.log_odds = rb.log_cr - s.log_za;
  rb.ur = sigmoid(rb.log_odds);
  return rb;
}

EstimatorSpec reference_estimator(const SetGeometry& geom, const ReferenceBound& rb,
                                  std::optional<double> reserve) {
  EstimatorSpec est;
  est.rule = TailRule::ReferenceWeighted;
  est.tail_weights = rb.beta();
  if (geom.m() == 0 || rb.ur == 0.0) return est;
  if (reserve) {
    if (!(*reserve > 0.0 && *reserve < 1.0)) {
      throw Error(ErrorCode::Domain, "estimator reserve must lie in (0, 1)");
    }
    est.reserve = *reserve;
  } else {
    est.reserve = rb.ur / std::numbers::e;
  }
  return est;
}

std::vector<double> reference_caps(const SetGeometry& geom, const ReferenceBound& rb, double t) {
  std::vector<double> caps(rb.log_b.size());
  for (std::size_t i = 0; i < caps.size(); ++i) {
    caps[i] = (1.0 - t) * std::exp(rb.log_b[i] - geom.summary.log_za);
  }
  return caps;
}

namespace {

void check_reference_mass(const ReferenceBound& rb, double t) {
  if (!(t >= 0.0 && t <= rb.ur + numeric_policy().membership_tol)) {
    throw Error(ErrorCode::Domain, "tail mass " + std::to_string(t) + " outside [0, U_R]");
  }
}

std::vector<double> estimator_tail(const ReferenceBound& rb, const EstimatorSpec& est) {
  std::vector<double> q(rb.tokens.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double w = est.rule == TailRule::Uniform ? 1.0 / static_cast<double>(q.size())
                                                   : est.tail_weights.at(j);
    q[j] = est.reserve * w;
  }
  return q;
}

bool all_equal(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

BestResponse reference_best_response(const SetGeometry& geom, const ReferenceBound& rb,
                                     const EstimatorSpec& est, double t) {
  check_reference_mass(rb, t);
  BestResponse out;
  if (rb.tokens.empty()) return out;
  t = std::min(t, rb.ur);
  out.point.t = t;
  const auto caps = reference_caps(geom, rb, t);
  const auto q = estimator_tail(rb, est);
  const auto v = capped_vertex_search(caps, q, t);
  for (std::size_t j = 0; j < caps.size(); ++j) {
    if (v.alloc[j] > 0.0) out.point.tail.push_back({rb.tokens[j], v.alloc[j]});
  }
  out.kl = xlogx_over_y(1.0 - t, 1.0 - est.reserve) + v.value;
  out.exact = all_equal(caps) && all_equal(q);
  return out;
}

RiskResult reference_worst_case_risk(const SetGeometry& geom, const ReferenceBound& rb,
                                     const EstimatorSpec& est, std::size_t t_grid) {
  if (rb.tokens.empty() || rb.ur == 0.0) return {-std::log1p(-est.reserve), 0.0, true};
  t_grid = std::max<std::size_t>(t_grid, 100);

  // Caps scale as (1 - t) B_u, so the fill orders do not depend on t and can
  // be sorted once.
  const auto base = reference_caps(geom, rb, 0.0);
  const auto q = estimator_tail(rb, est);
  const std::size_t n = base.size();
  std::vector<std::vector<std::size_t>> orders(3, std::vector<std::size_t>(n));
  for (auto& o : orders) std::iota(o.begin(), o.end(), std::size_t{0});
  std::stable_sort(orders[0].begin(), orders[0].end(), [&](auto a, auto b) { return q[a] < q[b]; });
  std::stable_sort(orders[1].begin(), orders[1].end(),
                   [&](auto a, auto b) { return q[a] * base[b] < q[b] * base[a]; });
  std::stable_sort(orders[2].begin(), orders[2].end(),
                   [&](auto a, auto b) { return base[a] > base[b]; });

  auto f = [&](double t) {
    double best = -kInf;
    for (const auto& order : orders) {
      double left = t, value = 0.0;
      for (std::size_t i : order) {
        if (left <= 0.0) break;
        const double p = std::min((1.0 - t) * base[i], left);
        left -= p;
        value += xlogx_over_y(p, q[i]);
      }
      best = std::max(best, value);
    }
    return xlogx_over_y(1.0 - t, 1.0 - est.reserve) + best;
  };
  auto [t, v] = detail::grid_then_golden_max(f, rb.ur, t_grid, numeric_policy().golden_tol);
  return {v, t, all_equal(base) && all_equal(q)};
}

DiameterOracleResult reference_box_oracle(const SetGeometry& geom, const ReferenceBound& rb,
                                          std::size_t resolution, std::size_t point_budget) {
  return box_diameter_oracle(geom.summary.scores, rb.log_b, resolution, point_budget);
}

RhoDiagnostics calibrate_rho(std::span<const std::pair<double, double>> pairs,
                             std::span<const double> candidate_rhos,
                             std::optional<std::size_t> anchor) {
  if (pairs.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "calibrate_rho needs at least 2 observed pairs");
  }
  std::vector<double> diff;
  diff.reserve(pairs.size());
  for (const auto& [teacher, ref] : pairs) {
    const double d = teacher - ref;
    if (!std::isfinite(d)) throw Error(ErrorCode::Validation, "non-finite logit difference");
    diff.push_back(d);
  }
  if (anchor) {
    if (*anchor >= diff.size()) throw Error(ErrorCode::Domain, "anchor index out of range");
    const double shift = diff[*anchor];
    for (double& d : diff) d -= shift;
  }
  std::sort(diff.begin(), diff.end());

  auto quantile = [&](double level) {
    const double h = level * static_cast<double>(diff.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, diff.size() - 1);
    return diff[lo] + (h - static_cast<double>(lo)) * (diff[hi] - diff[lo]);
  };

  RhoDiagnostics out;
  out.n = diff.size();
  out.max = diff.back();
  out.median = quantile(0.5);
  for (double level : {0.1, 0.25, 0.5, 0.75, 0.9}) out.quantiles.emplace_back(level, quantile(level));
  for (double rho : candidate_rhos) {
    const auto within = std::upper_bound(diff.begin(), diff.end(), rho) - diff.begin();
    out.compliance.emplace_back(rho, static_cast<double>(within) / static_cast<double>(diff.size()));
  }
  out.label = kRhoDiagnosticLabel;
  return out;
}

}  // namespace censet
