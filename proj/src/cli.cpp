#include "censet/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>

#include "censet/errors.hpp"
#include "censet/log_math.hpp"
#include "censet/minimax.hpp"
#include "censet/normalized.hpp"
#include "censet/numeric_policy.hpp"
#include "censet/reference.hpp"
#include "censet/simulate.hpp"

namespace censet::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kRbinFootnote =
    "r_bin is a certified lower bound (binary endpoint), not the minimax value; "
    "sym_sup_kl and g_max bracket the symmetric estimator's risk from above";

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return in;
}

std::vector<TopKObservation> read_observations(const std::string& path) {
  auto in = open_input(path);
  return parse_observations(in);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json error_entry(const std::string& position_id, const Error& e) {
  return {{"position_id", position_id}, {"code", to_string(e.code())}, {"message", e.what()}};
}

std::string label_for(const TopKObservation& obs, std::size_t index) {
  return obs.position_id.empty() ? "#" + std::to_string(index) : obs.position_id;
}

// Full logit vector from a record that lists every token (K = V).
std::vector<double> dense_logits(const TopKObservation& obs) {
  if (obs.k() != obs.vocab_size) {
    throw Error(ErrorCode::Validation, "dump record '" + obs.position_id + "' reveals K=" +
                                           std::to_string(obs.k()) + " of V=" +
                                           std::to_string(obs.vocab_size) + " tokens; need K=V");
  }
  std::vector<double> z(obs.vocab_size);
  for (const auto& r : obs.revealed) z[static_cast<std::size_t>(r.token)] = r.score;
  return z;
}

LogitLaw law_from(const RunConfig& c) {
  if (c.law == "gaussian") return GaussianIid{c.mean, c.sd};
  if (c.law == "dirichlet") return DirichletSoftmax{c.concentration};
  if (c.law == "peaked") return PeakedHead{c.head_size, c.gap};
  throw Error(ErrorCode::Usage, "unknown --law '" + c.law + "' (gaussian|dirichlet|peaked)");
}

SyntheticTeacherConfig teacher_config(const RunConfig& c) {
  if (c.vocab == 0) throw Error(ErrorCode::Usage, "--vocab is required for synthetic teachers");
  return {c.vocab, law_from(c), c.temperature, c.seed};
}

json teacher_json(const RunConfig& c) {
  return {{"vocab_size", c.vocab}, {"positions", c.positions}, {"law", c.law},
          {"temperature", c.temperature}, {"seed", c.seed}};
}

// Per-observation risk summary shared by analyze and simulate.
json risk_fields(const SetGeometry& g) {
  json row;
  const bool exact = g.m() == 0 || g.uk == 0.0;
  row["uk"] = g.uk;
  row["log_odds"] = number_or_null(g.log_odds);
  row["one_minus_uk"] = g.one_minus_uk();
  if (exact) {
    row["cap_t0"] = nullptr;
    row["cap_tU"] = nullptr;
    row["s_star"] = 0.0;
    row["r_bin"] = 0.0;
    row["sym_reserve"] = 0.0;
    row["sym_sup_kl"] = 0.0;
    row["g_max"] = 0.0;
    row["g_argmax"] = 0.0;
    row["exactly_identified"] = g.m() == 0;
    return row;
  }
  row["cap_t0"] = per_token_cap(g, 0.0);
  row["cap_tU"] = per_token_cap(g, g.uk);
  const auto br = binary_reserve(g.uk);
  row["s_star"] = br.s_star;
  row["r_bin"] = br.r_bin;
  const auto est = symmetric_estimator(g);
  row["sym_reserve"] = est.reserve;
  row["sym_sup_kl"] = worst_case_risk(g, est).sup_kl;
  if (g.uk < 1.0) {
    const auto gm = g_max(g.uk);
    row["g_max"] = gm.g_max;
    row["g_argmax"] = gm.t_argmax;
  } else {
    row["g_max"] = nullptr;
    row["g_argmax"] = nullptr;
  }
  row["exactly_identified"] = false;
  return row;
}

std::mt19937_64 oracle_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

TopKObservation random_small_observation(std::mt19937_64& rng, std::size_t max_v) {
  std::uniform_int_distribution<std::size_t> vdist(2, max_v);
  const std::size_t v = vdist(rng);
  std::uniform_int_distribution<std::size_t> kdist(1, v - 1);
  const std::size_t k = kdist(rng);
  std::normal_distribution<double> score(0.0, 2.0);
  std::vector<double> z(v);
  for (double& x : z) x = score(rng);
  return censor(z, k, AccessMode::UnnormalizedLogits);
}

struct CheckTally {
  std::string name;
  double tolerance = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double max_error = 0.0;

  void record(double error) {
    ++trials;
    max_error = std::max(max_error, std::isnan(error) ? kInf : error);
    if (!(error <= tolerance)) ++failures;
  }

  json to_json() const {
    return {{"check", name}, {"trials", trials}, {"failures", failures},
            {"max_error", number_or_null(max_error)}, {"tolerance", tolerance},
            {"passed", failures == 0}};
  }
};

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string cell(const json& v, bool table) {
  if (v.is_null()) return table ? "-" : "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) {
    if (!table) return format_number(v.get<double>());
    std::ostringstream os;
    os << std::setprecision(6) << v.get<double>();
    return os.str();
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (!table && s.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      return quoted + "\"";
    }
    return s;
  }
  return v.dump();
}

const std::set<std::string>& divergence_keys() {
  static const std::set<std::string> keys{
      "r_bin",          "g_max",          "sym_sup_kl",         "rbin_mean",
      "r_bin_ur",       "g_max_ur",       "ref_sup_kl",         "average_lower",
      "average_upper",  "per_position_lower", "per_position_upper", "joint_grid_sup",
      "factored_grid_sum", "sup_kl",      "first_order"};
  return keys;
}

void scale_divergences(json& node) {
  if (node.is_array()) {
    for (auto& child : node) scale_divergences(child);
    return;
  }
  if (!node.is_object()) return;
  for (auto& [key, value] : node.items()) {
    if (divergence_keys().count(key)) {
      if (value.is_number_float()) {
        value = value.get<double>() / std::numbers::ln2;
      } else if (value.is_array()) {
        for (auto& x : value) {
          if (x.is_number()) x = x.get<double>() / std::numbers::ln2;
        }
      }
    } else {
      scale_divergences(value);
    }
  }
}

}  // namespace

void convert_to_bits(json& report) {
  scale_divergences(report);
  report["units"] = "bits";
}

json analyze_report(const RunConfig& config, int& status) {
  const auto observations = read_observations(config.input);
  json report{{"command", "analyze"}, {"units", "nats"}, {"footnote", kRbinFootnote}};
  json rows = json::array(), errors = json::array();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    const auto id = label_for(obs, i);
    try {
      const auto g = geometry(obs);
      json row{{"position_id", id},
               {"mode", std::string(to_string(obs.mode))},
               {"vocab_size", obs.vocab_size},
               {"k", obs.k()},
               {"m", g.m()},
               {"log_za", g.summary.log_za},
               {"tau", g.summary.tau}};
      row.update(risk_fields(g));
      if (obs.mode == AccessMode::NormalizedLogProbs) {
        const auto ng = normalized_geometry(obs);
        row["t_star"] = ng.t_star;
        row["norm_cap"] = ng.cap;
        row["norm_diameter"] = ng.diameter;
        row["norm_bracket_lower"] = ng.bracket_lower;
        row["norm_condition"] = to_string(ng.condition);
      } else {
        row["t_star"] = nullptr;
        row["norm_cap"] = nullptr;
        row["norm_diameter"] = nullptr;
        row["norm_bracket_lower"] = nullptr;
        row["norm_condition"] = nullptr;
      }
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      errors.push_back(error_entry(id, e));
    }
  }
  if (!errors.empty()) status = 1;
  report["rows"] = std::move(rows);
  report["errors"] = std::move(errors);
  return report;
}

json ksweep_report(const RunConfig& config, int& status) {
  std::vector<std::vector<double>> positions;
  json source;
  if (!config.input.empty()) {
    for (const auto& obs : read_observations(config.input)) positions.push_back(dense_logits(obs));
    source = {{"input", config.input}};
  } else {
    positions = generate_teacher(teacher_config(config), config.positions);
    source = {{"synthetic", teacher_json(config)}};
  }
  std::vector<std::size_t> ks = config.k_list;
  if (ks.empty()) ks = {1, 5, 10, 20, 50, 100};
  const auto sweep = ksweep(positions, ks);

  json rows = json::array(), warnings = json::array();
  for (const auto& r : sweep) {
    if (r.skipped) {
      warnings.push_back("K=" + std::to_string(r.k) + " skipped: exceeds V (or K=0)");
      rows.push_back({{"K", r.k}, {"uk_mean", nullptr}, {"uk_sd", nullptr}, {"rbin_mean", nullptr},
                      {"tail_mass_mean", nullptr}, {"n", 0}});
      continue;
    }
    rows.push_back({{"K", r.k}, {"uk_mean", r.uk_mean}, {"uk_sd", r.uk_sd},
                    {"rbin_mean", r.rbin_mean}, {"tail_mass_mean", r.tail_mass_mean}, {"n", r.n}});
  }
  (void)status;
  return {{"command", "ksweep"}, {"units", "nats"}, {"footnote", kRbinFootnote},
          {"source", source}, {"rows", rows}, {"warnings", warnings}, {"errors", json::array()}};
}

json certify_report(const RunConfig& config, int& status) {
  if (!config.delta) throw Error(ErrorCode::Usage, "certify needs --delta");
  const double delta = *config.delta;
  if (!(delta > 0.0)) throw Error(ErrorCode::Domain, "--delta must be positive");
  json rows = json::array(), errors = json::array();
  auto emit = [&](const std::string& id, const CriticalVerdict& v) {
    rows.push_back({{"position_id", id}, {"k", v.k}, {"uk", v.uk}, {"r_bin", v.r_bin},
                    {"verdict", to_string(v.verdict)}, {"first_order_ok", v.first_order_ok}});
  };
  for (double u : config.u_list) {
    try {
      emit("u=" + format_number(u), critical_verdict(0, u, delta));
    } catch (const Error& e) {
      errors.push_back(error_entry("u=" + format_number(u), e));
    }
  }
  if (!config.input.empty()) {
    const auto observations = read_observations(config.input);
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const auto id = label_for(observations[i], i);
      try {
        if (config.k_list.empty()) {
          const auto g = geometry(observations[i]);
          emit(id, critical_k(std::span(&g, 1), delta).front());
        } else {
          const auto z = dense_logits(observations[i]);
          std::vector<SetGeometry> sweep;
          for (std::size_t k : config.k_list) {
            if (k >= 1 && k <= z.size()) sweep.push_back(geometry(censor(z, k, AccessMode::UnnormalizedLogits)));
          }
          for (const auto& v : critical_k(sweep, delta)) emit(id, v);
        }
      } catch (const Error& e) {
        errors.push_back(error_entry(id, e));
      }
    }
  }
  if (config.input.empty() && config.u_list.empty()) {
    throw Error(ErrorCode::Usage, "certify needs --input or --u");
  }
  if (!errors.empty()) status = 1;
  return {{"command", "certify"},
          {"units", "nats"},
          {"delta", delta},
          {"first_order_threshold", std::numbers::e * delta},
          {"threshold_band", numeric_policy().threshold_band},
          {"footnote", "IMPOSSIBLE is certified by r_bin > delta; OPEN is only a necessary condition"},
          {"rows", rows},
          {"errors", errors}};
}

json reference_report(const RunConfig& config, int& status) {
  if (config.reference.empty()) throw Error(ErrorCode::Usage, "reference needs --reference");
  const double rho = config.rho.value_or(1.0);
  const auto observations = read_observations(config.input);
  auto ref_in = open_input(config.reference);
  const auto refs = parse_reference_dump(ref_in);

  std::unordered_map<std::string, const ReferenceRecord*> by_id;
  for (const auto& r : refs) {
    if (!r.position_id.empty()) by_id[r.position_id] = &r;
  }
  json rows = json::array(), errors = json::array();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    const auto id = label_for(obs, i);
    try {
      const ReferenceRecord* ref = nullptr;
      if (auto it = by_id.find(obs.position_id); !obs.position_id.empty() && it != by_id.end()) {
        ref = it->second;
      } else if (i < refs.size() && refs[i].position_id.empty()) {
        ref = &refs[i];
      }
      if (!ref) throw Error(ErrorCode::Coverage, "no reference record for position '" + id + "'");

      const auto g = geometry(obs);
      const auto rb = reference_geometry(g, ref->logits, rho);
      const auto est = reference_estimator(g, rb);
      json row{{"position_id", id}, {"k", obs.k()}, {"m", g.m()}, {"rho", rho},
               {"uk", g.uk}, {"ur", rb.ur}, {"log_cr", number_or_null(rb.log_cr)},
               {"reserve", est.reserve}};
      if (rb.ur > 0.0 && rb.ur < 1.0) {
        row["r_bin_ur"] = binary_reserve(rb.ur).r_bin;
        row["g_max_ur"] = g_max(rb.ur).g_max;
        const auto risk = reference_worst_case_risk(g, rb, est);
        row["ref_sup_kl"] = risk.sup_kl;
        row["ref_sup_kl_is_lower_bound"] = !risk.exact;
      } else {
        row["r_bin_ur"] = 0.0;
        row["g_max_ur"] = 0.0;
        row["ref_sup_kl"] = 0.0;
        row["ref_sup_kl_is_lower_bound"] = false;
      }

      std::vector<std::pair<double, double>> pairs;
      for (const auto& r : obs.revealed) {
        if (ref->logits.covers(r.token)) {
          const double z = ref->logits.at(r.token);
          if (std::isfinite(z)) pairs.emplace_back(r.score, z);
        }
      }
      if (pairs.size() >= 2) {
        const auto d = calibrate_rho(pairs, config.rho_candidates);
        json q = json::object(), comp = json::object();
        for (const auto& [level, value] : d.quantiles) q[format_number(level)] = value;
        for (const auto& [r, frac] : d.compliance) comp[format_number(r)] = frac;
        row["calibration"] = {{"n", d.n}, {"max", d.max}, {"median", d.median},
                              {"quantiles", q}, {"compliance", comp}, {"label", d.label}};
      } else {
        row["calibration"] = nullptr;
      }
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      errors.push_back(error_entry(id, e));
    }
  }
  if (!errors.empty()) status = 1;
  return {{"command", "reference"}, {"units", "nats"}, {"footnote", kRbinFootnote},
          {"rows", rows}, {"errors", errors}};
}

json simulate_report(const RunConfig& config, int& status) {
  const auto teacher = generate_teacher(teacher_config(config), config.positions);
  std::vector<std::size_t> ks = config.k_list;
  if (ks.empty()) ks = {1, 5, 10, 20, 50, 100};
  json rows = json::array(), warnings = json::array();
  for (std::size_t k : ks) {
    if (k == 0 || k > config.vocab) {
      warnings.push_back("K=" + std::to_string(k) + " skipped: outside [1, V]");
      continue;
    }
    for (std::size_t i = 0; i < teacher.size(); ++i) {
      const auto obs = censor(teacher[i], k, AccessMode::UnnormalizedLogits);
      const auto g = geometry(obs);
      json row{{"position", i}, {"k", k}};
      row.update(risk_fields(g));
      row["t_star"] = hidden_tail_mass(censor(teacher[i], k, AccessMode::NormalizedLogProbs)).value;
      rows.push_back(std::move(row));
    }
  }
  (void)status;
  return {{"command", "simulate"}, {"units", "nats"}, {"footnote", kRbinFootnote},
          {"teacher", teacher_json(config)}, {"rows", rows}, {"warnings", warnings},
          {"errors", json::array()}};
}

json compose_report(const RunConfig& config, int& status) {
  const auto observations = read_observations(config.input);
  if (observations.empty()) throw Error(ErrorCode::Domain, "compose needs at least one observation");
  std::vector<SetGeometry> geoms;
  std::vector<EstimatorSpec> ests;
  json ids = json::array();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    geoms.push_back(geometry(observations[i]));
    ests.push_back(symmetric_estimator(geoms.back()));
    ids.push_back(label_for(observations[i], i));
  }
  const auto c = compose_nonadaptive(geoms, ests);
  const bool separable = c.joint_grid_nodes == 0 ||
                         std::abs(c.joint_grid_sup - c.factored_grid_sum) <= 1e-9;
  if (!separable) status = 1;
  json rows = json::array();
  for (std::size_t i = 0; i < geoms.size(); ++i) {
    rows.push_back({{"position_id", ids[i]}, {"uk", geoms[i].uk},
                    {"r_bin", c.per_position_lower[i]}, {"sym_sup_kl", c.per_position_upper[i]}});
  }
  return {{"command", "compose"},
          {"units", "nats"},
          {"footnote", kRbinFootnote},
          {"m", geoms.size()},
          {"average_lower", c.average_lower},
          {"average_upper", c.average_upper},
          {"joint_grid_nodes", c.joint_grid_nodes},
          {"joint_grid_sup", number_or_null(c.joint_grid_sup)},
          {"factored_grid_sum", number_or_null(c.factored_grid_sum)},
          {"separable", separable},
          {"rows", rows},
          {"errors", json::array()}};
}

json oracle_report(const RunConfig& config, int& status) {
  const std::size_t trials = std::max<std::size_t>(config.trials, 1);
  std::vector<CheckTally> checks;

  {
    CheckTally diam{"diameter_vs_uk", 1e-3}, pair{"extremal_pair_tv", 1e-12};
    auto rng = oracle_rng(config.seed, 1);
    for (std::size_t i = 0; i < trials; ++i) {
      const auto g = geometry(random_small_observation(rng, 8));
      diam.record(std::abs(brute_diameter_oracle(g, 20).diameter - g.uk));
      const auto [p0, p1] = extremal_pair(g);
      pair.record(std::abs(tv(to_distribution(g, p0), to_distribution(g, p1)) - g.uk));
    }
    checks.push_back(diam);
    checks.push_back(pair);
  }
  {
    CheckTally bal{"balancing_vs_binary_reserve", 1e-6};
    for (std::size_t i = 0; i < 50; ++i) {
      const double u = std::exp(std::log(1e-4) + (std::log(0.999) - std::log(1e-4)) * i / 49.0);
      const auto br = binary_reserve(u);
      const auto bo = balancing_oracle(u, 2000);
      bal.record(std::max(std::abs(bo.s - br.s_star), std::abs(bo.risk - br.r_bin)));
    }
    checks.push_back(bal);
  }
  {
    CheckTally order{"rbin_le_sup_le_gmax", 1e-6};
    auto rng = oracle_rng(config.seed, 2);
    std::uniform_real_distribution<double> udist(0.01, 0.98);
    for (std::size_t i = 0; i < trials; ++i) {
      const double u = udist(rng);
      // K = 1 head at score 0 and M = 1000 censored tokens at tau tuned to hit u.
      const std::size_t m = 1000;
      const double tau = std::log(u / (1.0 - u)) - std::log(static_cast<double>(m));
      const auto obs = make_observation(m + 1, {{0, 0.0}, {1, tau}}, AccessMode::UnnormalizedLogits);
      const auto g = geometry(obs);
      const double sup = worst_case_risk(g, symmetric_estimator(g)).sup_kl;
      const double lo = binary_reserve(g.uk).r_bin, hi = g_max(g.uk).g_max;
      order.record(std::max({0.0, lo - sup, sup - hi}));
    }
    checks.push_back(order);
  }
  {
    CheckTally alloc{"allocation_vs_t_star", 1e-3};
    auto rng = oracle_rng(config.seed, 3);
    std::uniform_int_distribution<std::size_t> mdist(4, 12);
    std::uniform_real_distribution<double> cdist(0.02, 0.2);
    for (std::size_t i = 0; i < trials; ++i) {
      const std::size_t m = mdist(rng);
      const double c = cdist(rng);
      const std::size_t n = m / 2;
      std::uniform_real_distribution<double> tdist(0.0, static_cast<double>(n) * c);
      const double t = tdist(rng);
      alloc.record(std::abs(allocation_diameter_oracle(t, c, m, 64) - t));
    }
    checks.push_back(alloc);
  }
  {
    CheckTally box{"reference_box_vs_ur", 1e-3}, shrink{"ur_le_uk", 1e-12};
    auto rng = oracle_rng(config.seed, 4);
    std::normal_distribution<double> zref(-1.0, 2.0);
    std::uniform_real_distribution<double> rdist(0.0, 3.0);
    for (std::size_t i = 0; i < trials; ++i) {
      const auto g = geometry(random_small_observation(rng, 8));
      ReferenceLogits ref;
      ref.dense.resize(g.summary.vocab_size);
      for (double& z : ref.dense) z = zref(rng);
      const auto rb = reference_geometry(g, ref, rdist(rng));
      box.record(std::abs(reference_box_oracle(g, rb, 20).diameter - rb.ur));
      shrink.record(std::max(0.0, rb.ur - g.uk));
    }
    checks.push_back(box);
    checks.push_back(shrink);
  }
  {
    CheckTally dom{"best_response_dominance", 1e-12};
    auto rng = oracle_rng(config.seed, 5);
    for (std::size_t i = 0; i < trials; ++i) {
      const auto g = geometry(random_small_observation(rng, 10));
      const auto est = symmetric_estimator(g);
      std::uniform_real_distribution<double> tdist(0.0, g.uk);
      const double t = tdist(rng);
      const auto br = adversary_best_response(g, est, t);
      const auto q = estimator_distribution(g, est);
      const double cap = per_token_cap(g, t);
      const auto tail = censored_tokens(g.summary);
      double worst_gap = 0.0;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int s = 0; s < 200; ++s) {
        // Random capped allocation of t: water-fill random proportions.
        std::vector<double> w(tail.size());
        for (double& x : w) x = unit(rng);
        std::vector<double> alloc(tail.size(), 0.0);
        double left = t;
        for (int pass = 0; pass < 64 && left > 1e-15; ++pass) {
          double free_w = 0.0;
          for (std::size_t j = 0; j < w.size(); ++j) if (alloc[j] < cap) free_w += w[j];
          if (free_w <= 0.0) break;
          const double give = left;
          for (std::size_t j = 0; j < w.size(); ++j) {
            if (alloc[j] >= cap) continue;
            const double add = std::min(cap - alloc[j], give * w[j] / free_w);
            alloc[j] += add;
            left -= add;
          }
        }
        FeasiblePoint p{t, {}, false};
        for (std::size_t j = 0; j < tail.size(); ++j) p.tail.push_back({tail[j], alloc[j]});
        const double val = kl(to_distribution(g, p), q);
        worst_gap = std::max(worst_gap, val - br.kl);
      }
      dom.record(worst_gap);
    }
    checks.push_back(dom);
  }
  {
    CheckTally sep{"composition_separability", 1e-9};
    auto rng = oracle_rng(config.seed, 6);
    for (std::size_t i = 0; i < std::min<std::size_t>(trials, 10); ++i) {
      std::vector<SetGeometry> geoms;
      std::vector<EstimatorSpec> ests;
      for (int j = 0; j < 3; ++j) {
        geoms.push_back(geometry(random_small_observation(rng, 10)));
        ests.push_back(symmetric_estimator(geoms.back()));
      }
      const auto c = compose_nonadaptive(geoms, ests, 200, 200000);
      sep.record(std::abs(c.joint_grid_sup - c.factored_grid_sum));
    }
    checks.push_back(sep);
  }

  json rows = json::array();
  bool all = true;
  for (const auto& c : checks) {
    rows.push_back(c.to_json());
    all = all && c.failures == 0;
  }
  if (!all) status = 1;
  return {{"command", "oracle"}, {"seed", config.seed}, {"trials", trials},
          {"all_passed", all}, {"rows", rows}, {"errors", json::array()}};
}

std::string render(const json& report, Format format) {
  if (format == Format::Json) return report.dump(2) + "\n";
  const json& rows = report.contains("rows") ? report["rows"] : json::array();
  std::vector<std::string> columns;
  for (const auto& row : rows) {
    for (const auto& [key, value] : row.items()) {
      if (value.is_object()) continue;
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
    }
  }
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    auto& line = cells.emplace_back();
    for (const auto& col : columns) {
      line.push_back(row.contains(col) ? cell(row[col], format == Format::Table) : "");
    }
  }
  std::ostringstream os;
  if (format == Format::Csv) {
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << "\n";
    for (const auto& line : cells) {
      for (std::size_t i = 0; i < line.size(); ++i) os << (i ? "," : "") << line[i];
      os << "\n";
    }
    return os.str();
  }
  std::vector<std::size_t> width(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    width[i] = columns[i].size();
    for (const auto& line : cells) width[i] = std::max(width[i], line[i].size());
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    os << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << columns[i];
  }
  os << "\n";
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      os << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << line[i];
    }
    os << "\n";
  }
  if (report.contains("footnote")) os << "note: " << report["footnote"].get<std::string>() << "\n";
  if (report.contains("units")) os << "units: " << report["units"].get<std::string>() << "\n";
  return os.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Identified-set geometry and certified recovery bounds for top-K observations",
               "censet"};
  app.require_subcommand(1, 1);

  std::string format_text;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--output", config.output, "Write the report here instead of stdout");
    sub->add_option("--format", format_text, "json|csv|table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    sub->add_flag("--bits", config.bits, "Display divergences in bits");
    sub->add_option("--seed", config.seed, "Seed for randomized work (default 0)");
  };
  auto teacher = [&](CLI::App* sub) {
    sub->add_option("--vocab", config.vocab, "Synthetic vocabulary size");
    sub->add_option("--positions", config.positions, "Synthetic positions");
    sub->add_option("--law", config.law, "gaussian|dirichlet|peaked");
    sub->add_option("--temperature", config.temperature);
    sub->add_option("--mean", config.mean);
    sub->add_option("--sd", config.sd);
    sub->add_option("--concentration", config.concentration);
    sub->add_option("--head-size", config.head_size);
    sub->add_option("--gap", config.gap);
  };

  auto* analyze = app.add_subcommand("analyze", "Per-observation geometry and risk bracket");
  analyze->add_option("--input", config.input, "Observations (JSONL)")->required();
  common(analyze);

  auto* sweep = app.add_subcommand("ksweep", "U_K / R_bin statistics across K");
  sweep->add_option("--input", config.input, "Full logit dumps (JSONL, K=V)");
  sweep->add_option("--k", config.k_list, "K values")->delimiter(',');
  common(sweep);
  teacher(sweep);

  auto* cert = app.add_subcommand("certify", "Critical-K verdicts for a KL tolerance");
  cert->add_option("--input", config.input, "Observations, or full dumps with --k");
  cert->add_option("--k", config.k_list, "Re-censor dumps at these K")->delimiter(',');
  cert->add_option("--u", config.u_list, "Direct U values")->delimiter(',');
  cert->add_option("--delta", config.delta, "KL tolerance in nats")->required();
  common(cert);

  auto* ref = app.add_subcommand("reference", "Reference-aware diameter and rho diagnostics");
  ref->add_option("--input", config.input, "Observations (JSONL)")->required();
  ref->add_option("--reference", config.reference, "Reference logit dump (JSONL)")->required();
  ref->add_option("--rho", config.rho, "Calibration margin (default 1.0)");
  ref->add_option("--rho-candidates", config.rho_candidates)->delimiter(',');
  common(ref);

  auto* sim = app.add_subcommand("simulate", "Synthetic teacher -> censor -> risk");
  sim->add_option("--k", config.k_list, "K values")->delimiter(',');
  common(sim);
  teacher(sim);
  sim->get_option("--vocab")->required();

  auto* comp = app.add_subcommand("compose", "Non-adaptive composition over observations");
  comp->add_option("--input", config.input, "Observations (JSONL)")->required();
  common(comp);

  auto* orc = app.add_subcommand("oracle", "Run brute-force oracle checks");
  orc->add_option("--trials", config.trials, "Random cases per check");
  common(orc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  auto fail = [&](const std::string& code, const std::string& message, int exit_code) {
    json doc{{"errors", json::array({{{"code", code}, {"message", message}}})}};
    err << doc.dump() << "\n";
    return exit_code;
  };

  if (const char* path = std::getenv("CENSET_NUMERIC_POLICY"); path && *path) {
    try {
      auto in = open_input(path);
      std::stringstream buf;
      buf << in.rdbuf();
      set_numeric_policy(parse_numeric_policy(buf.str()));
    } catch (const Error& e) {
      return fail(to_string(e.code()), std::string("CENSET_NUMERIC_POLICY: ") + e.what(), 2);
    }
  }

  Format default_format = Format::Json;
  json (*builder)(const RunConfig&, int&) = nullptr;
  if (*analyze) {
    config.command = Command::Analyze;
    builder = analyze_report;
  } else if (*sweep) {
    config.command = Command::Ksweep;
    builder = ksweep_report;
    default_format = Format::Csv;
  } else if (*cert) {
    config.command = Command::Certify;
    builder = certify_report;
  } else if (*ref) {
    config.command = Command::Reference;
    builder = reference_report;
  } else if (*sim) {
    config.command = Command::Simulate;
    builder = simulate_report;
  } else if (*comp) {
    config.command = Command::Compose;
    builder = compose_report;
  } else {
    config.command = Command::Oracle;
    builder = oracle_report;
  }
  if (format_text == "json") config.format = Format::Json;
  else if (format_text == "csv") config.format = Format::Csv;
  else if (format_text == "table") config.format = Format::Table;

  int status = 0;
  json report;
  try {
    report = builder(config, status);
  } catch (const Error& e) {
    const int code = e.code() == ErrorCode::Domain || e.code() == ErrorCode::Infeasible ? 1 : 2;
    return fail(to_string(e.code()), e.what(), code);
  }
  if (config.bits) convert_to_bits(report);

  const std::string text = render(report, config.format.value_or(default_format));
  if (config.output.empty()) {
    out << text;
  } else {
    std::ofstream file(config.output, std::ios::binary | std::ios::trunc);
    if (!file) return fail("io", "cannot write '" + config.output + "'", 2);
    file << text;
  }
  if (report.contains("errors") && !report["errors"].empty()) {
    json doc{{"errors", report["errors"]}};
    err << doc.dump() << "\n";
  }
  return status;
}

}  // namespace censet::cli
