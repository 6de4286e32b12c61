// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "censet/identified_set.hpp"
#include "censet/minimax.hpp"
#include "censet/normalized.hpp"
#include "censet/reference.hpp"
#include "censet/simulate.hpp"
#include "oracles.hpp"

using namespace censet;
using std::numbers::e;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& ex) {
    o = {false, std::string("exception: ") + ex.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s > 0 && secs >= time_limit_s) {
    o.pass = false;
    o.detail += " [over time limit " + std::to_string(time_limit_s) + " s]";
  }
  if (!o.pass) ++failures;
  std::printf("CRITERION %2d %s  %s (%s; %.3f s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

SetGeometry geometry_for_u(double u, std::size_t m) {
  m = std::max<std::size_t>(m, static_cast<std::size_t>(std::ceil(4.0 * u / (1.0 - u))));
  const double a = std::log(static_cast<double>(m) * (1.0 - u) / u - 1.0);
  return geometry(make_observation(m + 2, {{0, a}, {1, 0.0}}, AccessMode::UnnormalizedLogits));
}

SetGeometry random_geometry(std::mt19937_64& rng, std::size_t max_v) {
  const std::size_t v = 2 + rng() % (max_v - 1);
  const std::size_t k = 1 + rng() % (v - 1);
  std::normal_distribution<double> sc(0.0, 2.0);
  std::vector<RevealedToken> rev;
  for (std::size_t i = 0; i < k; ++i) rev.push_back({static_cast<TokenId>(i), sc(rng)});
  return geometry(make_observation(v, rev, AccessMode::UnnormalizedLogits));
}

struct TableRow {
  double u, r_bin, first, gap, g_max;
};

constexpr TableRow kTable[] = {
    {0.10, 0.038, 0.037, 0.001, 0.040}, {0.30, 0.123, 0.110, 0.012, 0.142},
    {0.50, 0.223, 0.184, 0.039, 0.294}, {0.70, 0.349, 0.258, 0.092, 0.559},
    {0.81, 0.437, 0.298, 0.139, 0.825}, {0.91, 0.541, 0.335, 0.206, 1.309},
    {0.98, 0.644, 0.361, 0.284, 2.416},
};

}  // namespace

int main() {
  criterion(1, "gap table reproduction", 1.0, [] {
    double worst = 0;
    for (const auto& row : kTable) {
      const double rb = binary_reserve(row.u).r_bin, fo = row.u / e, gm = g_max(row.u).g_max;
      worst = std::max({worst, std::abs(rb - row.r_bin), std::abs(fo - row.first),
                        std::abs(rb - fo - row.gap), std::abs(gm - row.g_max)});
    }
    return Outcome{worst <= 1e-3, fmt("max table error %.2e, tol 1e-3", worst)};
  });

  criterion(2, "critical-U threshold and K=20 verdict", 0, [] {
    const double u = testing::bisect([](double x) { return binary_reserve(x).r_bin - 0.1; }, 1e-3, 0.9);
    const auto v = critical_verdict(20, 0.908, 0.1);
    const bool ok = std::abs(u - 0.25) <= 0.005 && v.verdict == Verdict::Impossible &&
                    std::abs(v.r_bin - 0.538) <= 1e-3;
    return Outcome{ok, fmt("U(R_bin=0.1) = %.6f, R_bin(0.908) = %.6f, ", u, v.r_bin) + to_string(v.verdict)};
  });

  criterion(3, "diameter oracle equivalence", 30.0, [] {
    std::mt19937_64 rng(2024);
    double worst_oracle = 0, worst_pair = 0;
    const int n = 60;
    for (int i = 0; i < n; ++i) {
      const auto g = random_geometry(rng, 8);
      worst_oracle = std::max(worst_oracle, std::abs(brute_diameter_oracle(g, 50).diameter - g.uk));
      if (g.m() == 0) continue;
      const auto [a, b] = extremal_pair(g);
      worst_pair = std::max(worst_pair, std::abs(testing::l1_half(to_distribution(g, a), to_distribution(g, b)) - g.uk));
    }
    return Outcome{worst_oracle <= 1e-3 && worst_pair <= 1e-12,
                   fmt("%g geometries, oracle err %.2e, extremal-pair err %.2e", n, worst_oracle, worst_pair)};
  });

  criterion(4, "balancing-oracle equivalence", 0, [] {
    double worst = 0;
    for (double u : testing::log_grid(1e-4, 0.999, 50))
      worst = std::max(worst, std::abs(balancing_oracle(u).risk - binary_reserve(u).r_bin));
    return Outcome{worst <= 1e-6, fmt("50 U points, max |R_hat - R_bin| = %.2e", worst)};
  });

  criterion(5, "envelope ordering and first-order tightness", 0, [] {
    double order_violation = 0, tight_ratio = 0;
    auto grid = testing::log_grid(1e-3, 0.99, 40);
    for (double u : {0.005, 0.01, 0.02, 0.03, 0.04, 0.05}) grid.push_back(u);
    for (double u : grid) {
      for (std::size_t m : {1, 3, 1000}) {
        const auto g = geometry_for_u(u, m);
        const double sup = worst_case_risk(g, symmetric_estimator(g)).sup_kl;
        const double rb = binary_reserve(g.uk).r_bin, gm = g_max(g.uk).g_max;
        order_violation = std::max({order_violation, rb - sup, sup - gm - 1e-6});
        if (g.uk <= 0.05) tight_ratio = std::max(tight_ratio, (sup - rb) / g.uk);
      }
    }
    return Outcome{order_violation <= 0 && tight_ratio <= 0.02,
                   fmt("max ordering violation %.2e, max (sup - R_bin)/U at U<=0.05 = %.4f (<= 0.02)",
                       order_violation, tight_ratio)};
  });

  criterion(6, "expansion bounds", 0, [] {
    double worst = 0;
    for (double u : testing::log_grid(1e-4, 0.5, 60))
      worst = std::max(worst, std::abs(binary_reserve(u).s_star - u / e) / (u * u));
    double s4 = 0, s5 = 0, s6 = 0, y2 = 0, y3 = 0;
    for (int i = 1; i <= 200; ++i) {
      const double u = 0.2 * i / 200.0, y = binary_reserve(u).r_bin - u / e;
      s4 += std::pow(u, 4), s5 += std::pow(u, 5), s6 += std::pow(u, 6);
      y2 += y * u * u, y3 += y * std::pow(u, 3);
    }
    const double a = (y2 * s6 - y3 * s5) / (s4 * s6 - s5 * s5);
    const double target = 1.0 / (2 * e) - 1.0 / (2 * e * e);
    const double rel = std::abs(a - target) / target;
    return Outcome{worst <= 1.0 && rel <= 0.1,
                   fmt("max |s*-U/e|/U^2 = %.4f, fitted U^2 coeff %.5f vs %.5f", worst, a, target)};
  });

  criterion(7, "reference shrinkage", 0, [] {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> zr(-1.0, 2.0);
    std::uniform_real_distribution<double> rho_d(0.0, 3.0);
    double shrink = 0, mono = 0, sat = 0, box = 0;
    int boxed = 0;
    const int n = 80;
    for (int i = 0; i < n; ++i) {
      const auto g = random_geometry(rng, i % 2 ? 8 : 60);
      ReferenceLogits ref;
      ref.dense.resize(g.summary.vocab_size);
      for (double& x : ref.dense) x = zr(rng);
      double prev = -1;
      for (double rho : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto rb = reference_geometry(g, ref, rho);
        shrink = std::max(shrink, rb.ur - g.uk);
        mono = std::max(mono, prev - rb.ur);
        prev = rb.ur;
      }
      sat = std::max(sat, std::abs(reference_geometry(g, ref, 1e3).ur - g.uk));
      if (g.summary.vocab_size <= 8) {
        const auto rb = reference_geometry(g, ref, rho_d(rng));
        box = std::max(box, std::abs(reference_box_oracle(g, rb, 40).diameter - rb.ur));
        ++boxed;
      }
    }
    return Outcome{shrink <= 1e-12 && mono <= 0 && sat <= 1e-9 && box <= 1e-3,
                   fmt("%g triples; U_R - U_K <= %.1e, rho=1e3 gap %.1e", n, shrink, sat) +
                       fmt(", box oracle err %.2e over %g", box, boxed)};
  });

  criterion(8, "normalized access", 0, [] {
    // M = 1: one censored token under logprobs.
    const auto one = make_observation(3, {{0, std::log(0.6)}, {1, std::log(0.3)}}, AccessMode::NormalizedLogProbs);
    const auto g1 = normalized_geometry(one);
    bool ok = g1.m == 1 && g1.diameter == 0.0 && g1.condition == DiameterCondition::SinglePoint;

    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double witness = 0, alloc = 0;
    int n = 0;
    while (n < 40) {
      const std::size_t m = 2 + rng() % 11;
      const double c = 0.02 + 0.2 * unit(rng);
      const double t = c * static_cast<double>(m / 2) * unit(rng);
      if (m < 2 * tokens_to_hold(t, c)) continue;
      ++n;
      const auto [a, b] = disjoint_witness(t, c, m);
      witness = std::max(witness, std::abs(testing::l1_half(a, b) - t) / t);
      alloc = std::max(alloc, std::abs(allocation_diameter_oracle(t, c, m, 32) - t));
    }
    ok = ok && witness <= 1e-15 && alloc <= 1e-3;
    return Outcome{ok, fmt("M=1 diameter %g; witness rel err %.1e; allocation oracle err %.2e", g1.diameter,
                           witness, alloc)};
  });

  criterion(9, "composition", 0, [] {
    const std::vector<SetGeometry> g{geometry_for_u(0.1, 50), geometry_for_u(0.3, 50), geometry_for_u(0.5, 50)};
    std::vector<EstimatorSpec> est;
    for (const auto& x : g) est.push_back(symmetric_estimator(x));
    const auto r = compose_nonadaptive(g, est, 200);
    const double target = (0.038 + 0.123 + 0.223) / 3.0;
    const double sep = std::abs(r.joint_grid_sup - r.factored_grid_sum);
    return Outcome{std::abs(r.average_lower - target) <= 1e-3 && r.joint_grid_nodes > 0 && sep <= 1e-9,
                   fmt("average lower %.6f vs %.6f, joint - factored %.1e", r.average_lower, target, sep)};
  });

  criterion(10, "pipeline statistics", 0, [] {
    const SyntheticTeacherConfig cfg{2000, GaussianIid{0.0, 2.0}, 1.0, 10};
    const std::vector<std::size_t> ks{1, 5, 10, 20, 50, 100};
    const auto run = [&] { return ksweep(generate_teacher(cfg, 64), ks); };
    const auto a = run(), b = run();
    bool mono = true, same = a.size() == b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i > 0) mono = mono && a[i].uk_mean <= a[i - 1].uk_mean && a[i].rbin_mean <= a[i - 1].rbin_mean;
      same = same && std::memcmp(&a[i].uk_mean, &b[i].uk_mean, sizeof(double)) == 0 &&
             std::memcmp(&a[i].uk_sd, &b[i].uk_sd, sizeof(double)) == 0 &&
             std::memcmp(&a[i].rbin_mean, &b[i].rbin_mean, sizeof(double)) == 0 &&
             std::memcmp(&a[i].tail_mass_mean, &b[i].tail_mass_mean, sizeof(double)) == 0;
    }
    return Outcome{mono && same, std::string(mono ? "monotone" : "NOT monotone") + ", " +
                                     (same ? "bit-identical rerun" : "rerun differs") +
                                     fmt(", U_1 = %.4f, U_100 = %.4f", a.front().uk_mean, a.back().uk_mean)};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
