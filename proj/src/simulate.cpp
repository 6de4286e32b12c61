#include "censet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "censet/errors.hpp"
#include "censet/log_math.hpp"

namespace censet {
namespace {

// Counter-based stream per position: results do not depend on how positions
// are scheduled.
std::mt19937_64 position_rng(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32),
                    0x63656e73u};
  return std::mt19937_64(seq);
}

void shift_to_log_mass(std::span<double> logits, double target) {
  const double shift = target - log_sum_exp(logits);
  for (double& z : logits) z += shift;
}

struct LawSampler {
  std::size_t v;
  std::mt19937_64& rng;

  std::vector<double> operator()(const GaussianIid& law) const {
    std::normal_distribution<double> normal(law.mean, law.sd);
    std::vector<double> z(v);
    for (double& x : z) x = normal(rng);
    return z;
  }

  std::vector<double> operator()(const DirichletSoftmax& law) const {
    std::gamma_distribution<double> gamma(law.concentration, 1.0);
    std::vector<double> z(v);
    for (double& x : z) x = std::log(std::max(gamma(rng), std::numeric_limits<double>::min()));
    return z;
  }

  std::vector<double> operator()(const PeakedHead& law) const {
    std::vector<std::size_t> ids(v);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    std::normal_distribution<double> head_jitter(0.0, 0.5), tail_jitter(0.0, 1.0);
    std::vector<double> head(law.head_size), tail(v - law.head_size);
    for (double& x : head) x = head_jitter(rng);
    for (double& x : tail) x = tail_jitter(rng);
    shift_to_log_mass(head, 0.0);
    shift_to_log_mass(tail, -law.gap);
    std::vector<double> z(v);
    for (std::size_t i = 0; i < head.size(); ++i) z[ids[i]] = head[i];
    for (std::size_t i = 0; i < tail.size(); ++i) z[ids[head.size() + i]] = tail[i];
    return z;
  }
};

void check_config(const SyntheticTeacherConfig& c) {
  if (c.vocab_size < 2) throw Error(ErrorCode::Domain, "synthetic teacher needs V >= 2");
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) {
    throw Error(ErrorCode::Domain, "temperature must be finite and positive");
  }
  if (const auto* g = std::get_if<GaussianIid>(&c.law)) {
    if (!(g->sd >= 0.0) || !std::isfinite(g->mean)) throw Error(ErrorCode::Domain, "bad Gaussian law");
  } else if (const auto* d = std::get_if<DirichletSoftmax>(&c.law)) {
    if (!(d->concentration > 0.0)) throw Error(ErrorCode::Domain, "Dirichlet concentration must be > 0");
  } else if (const auto* p = std::get_if<PeakedHead>(&c.law)) {
    if (p->head_size == 0 || p->head_size >= c.vocab_size || !std::isfinite(p->gap)) {
      throw Error(ErrorCode::Domain, "peaked head needs 1 <= head_size < V and a finite gap");
    }
  }
}

double population_sd(const std::vector<double>& xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

std::vector<std::vector<double>> generate_teacher(const SyntheticTeacherConfig& config,
                                                  std::size_t n_positions) {
  check_config(config);
  std::vector<std::vector<double>> out;
  out.reserve(n_positions);
  for (std::size_t i = 0; i < n_positions; ++i) {
    auto rng = position_rng(config.seed, i);
    auto z = std::visit(LawSampler{config.vocab_size, rng}, config.law);
    for (double& x : z) x /= config.temperature;
    out.push_back(std::move(z));
  }
  return out;
}

TopKObservation censor(std::span<const double> logits, std::size_t k, AccessMode mode,
                       std::string position_id) {
  const std::size_t v = logits.size();
  if (k == 0 || k > v) {
    throw Error(ErrorCode::Domain, "censor needs 1 <= K <= V, got K=" + std::to_string(k) +
                                       ", V=" + std::to_string(v));
  }
  for (double z : logits) {
    if (!std::isfinite(z)) throw Error(ErrorCode::Validation, "non-finite logit");
  }
  std::vector<std::size_t> ids(v);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](std::size_t a, std::size_t b) {
                      return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
                    });
  const double shift = mode == AccessMode::NormalizedLogProbs ? log_sum_exp(logits) : 0.0;
  std::vector<RevealedToken> revealed;
  revealed.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    revealed.push_back({static_cast<TokenId>(ids[i]), logits[ids[i]] - shift});
  }
  return make_observation(v, std::move(revealed), mode, std::move(position_id));
}

std::vector<SweepRow> ksweep(std::span<const std::vector<double>> positions,
                             std::span<const std::size_t> ks) {
  if (!std::is_sorted(ks.begin(), ks.end())) {
    throw Error(ErrorCode::Domain, "K list must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  rows.reserve(ks.size());
  for (std::size_t k : ks) {
    SweepRow row;
    row.k = k;
    const bool fits = k > 0 && !positions.empty() &&
                      std::all_of(positions.begin(), positions.end(),
                                  [&](const auto& z) { return k <= z.size(); });
    if (!fits) {
      row.skipped = true;
      rows.push_back(row);
      continue;
    }
    std::vector<double> uk, rbin, tail;
    uk.reserve(positions.size());
    for (const auto& z : positions) {
      const auto g = geometry(censor(z, k, AccessMode::UnnormalizedLogits));
      uk.push_back(g.uk);
      rbin.push_back(binary_reserve(g.uk).r_bin);
      tail.push_back(hidden_tail_mass(censor(z, k, AccessMode::NormalizedLogProbs)).value);
    }
    row.n = positions.size();
    row.uk_mean = mean_of(uk);
    row.uk_sd = population_sd(uk, row.uk_mean);
    row.rbin_mean = mean_of(rbin);
    row.tail_mass_mean = mean_of(tail);
    rows.push_back(row);
  }
  return rows;
}

CompositionResult compose_nonadaptive(std::span<const SetGeometry> geoms,
                                      std::span<const EstimatorSpec> estimators,
                                      std::size_t t_grid, std::size_t joint_budget) {
  const std::size_t m = geoms.size();
  if (m == 0) throw Error(ErrorCode::Domain, "composition needs at least one position");
  if (estimators.size() != m) {
    throw Error(ErrorCode::Domain, "one estimator per position is required");
  }
  CompositionResult out;
  for (std::size_t i = 0; i < m; ++i) {
    out.per_position_upper.push_back(worst_case_risk(geoms[i], estimators[i], t_grid).sup_kl);
    out.per_position_lower.push_back(binary_reserve(geoms[i].uk).r_bin);
  }
  out.average_upper = mean_of(out.per_position_upper);
  out.average_lower = mean_of(out.per_position_lower);

  // Joint adversary over the product of per-position tail-mass grids.
  std::size_t nodes = 2;
  auto fits = [&](std::size_t n) {
    double total = 1.0;
    for (std::size_t i = 0; i < m; ++i) total *= static_cast<double>(n);
    return total <= static_cast<double>(joint_budget);
  };
  if (!fits(nodes)) return out;
  while (nodes < t_grid + 1 && fits(nodes + 1)) ++nodes;
  out.joint_grid_nodes = nodes;

  std::vector<std::vector<double>> values(m, std::vector<double>(nodes));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const double t = geoms[i].uk * static_cast<double>(j) / static_cast<double>(nodes - 1);
      const auto& g = geoms[i];
      const auto& est = estimators[i];
      if (g.m() == 0) {
        values[i][j] = -std::log1p(-est.reserve);
      } else if (est.rule == TailRule::Uniform) {
        values[i][j] = uniform_best_response_kl(g.uk, g.one_minus_uk(), g.m(), est.reserve, t);
      } else {
        values[i][j] = adversary_best_response(g, est, t).kl;
      }
    }
    out.factored_grid_sum += *std::max_element(values[i].begin(), values[i].end());
  }
  std::vector<std::size_t> digit(m, 0);
  out.joint_grid_sup = -kInf;
  for (;;) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += values[i][digit[i]];
    out.joint_grid_sup = std::max(out.joint_grid_sup, total);
    std::size_t i = 0;
    while (i < m && ++digit[i] == nodes) digit[i++] = 0;
    if (i == m) break;
  }
  return out;
}

}  // namespace censet
