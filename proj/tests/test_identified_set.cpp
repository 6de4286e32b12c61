#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "censet/errors.hpp"
#include "censet/identified_set.hpp"
#include "oracles.hpp"

using namespace censet;
using std::numbers::e;

namespace {

SetGeometry geom_of(std::size_t v, std::vector<double> scores) {
  std::vector<RevealedToken> rev;
  for (std::size_t i = 0; i < scores.size(); ++i) rev.push_back({static_cast<TokenId>(i), scores[i]});
  return geometry(make_observation(v, rev, AccessMode::UnnormalizedLogits));
}

SetGeometry random_geom(std::mt19937_64& rng, std::size_t max_v) {
  const std::size_t v = 2 + rng() % (max_v - 1);
  const std::size_t k = 1 + rng() % (v - 1);
  std::normal_distribution<double> sc(0.0, 2.0);
  std::vector<double> s(k);
  for (double& x : s) x = sc(rng);
  return geom_of(v, s);
}

// A member drawn straight from the definition: tail logits below tau,
// i.e. unnormalized weights y_u in [0, exp(tau)].
FeasiblePoint sample_member(const SetGeometry& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto tail = censored_tokens(g.summary);
  std::vector<double> y(tail.size());
  const double b = std::exp(g.summary.tau - g.summary.log_za);  // relative to Z_A = 1
  double total = 1.0;
  // Mix in box vertices so the extremes are exercised.
  const int mode = static_cast<int>(rng() % 3);
  for (double& w : y) {
    w = mode == 0 ? b * unit(rng) : (unit(rng) < 0.5 ? 0.0 : b);
    total += w;
  }
  FeasiblePoint p;
  for (std::size_t j = 0; j < tail.size(); ++j) {
    p.tail.push_back({tail[j], y[j] / total});
    p.t += y[j] / total;
  }
  return p;
}

}  // namespace

TEST_CASE("geometry: full access gives U_K = 0") {
  const auto g = geom_of(3, {1.0, 0.5, 0.0});
  CHECK(g.m() == 0);
  CHECK(g.uk == 0.0);
  CHECK(g.one_minus_uk() == 1.0);
}

TEST_CASE("geometry: symmetric two-token case") {
  const auto g = geom_of(2, {0.0});
  CHECK(g.uk == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("geometry: V=4 example matches closed form and the brute oracle") {
  const auto g = geom_of(4, {1.0, 0.0});
  const double expect = 2.0 / (e + 1.0 + 2.0);
  CHECK(g.uk == doctest::Approx(expect).epsilon(1e-14));
  CHECK(std::abs(g.uk - 0.34982) < 1e-3);
  const auto o = brute_diameter_oracle(g, 50);
  CHECK(std::abs(o.diameter - g.uk) <= 1e-3);
  CHECK(o.diameter <= g.uk + 1e-12);
}

TEST_CASE("one minus U_K keeps relative precision near 1") {
  // tau - log Z_A + log M = 30: 1 - U_K = sigmoid(-30) ~ 9.36e-14.
  const auto g = geom_of(3, {0.0, 0.0});
  auto tight = g;
  tight.log_odds = 30.0;
  tight.uk = 1.0 / (1.0 + std::exp(-30.0));
  const double expect = std::exp(-30.0) / (1.0 + std::exp(-30.0));
  CHECK(tight.one_minus_uk() == doctest::Approx(expect).epsilon(1e-14));
  CHECK(std::abs((1.0 - tight.uk) - expect) / expect > 1e-6);  // the naive form loses digits
}

TEST_CASE("per-token cap") {
  const auto g = geom_of(4, {1.0, 0.0});
  SUBCASE("t = U_K gives U_K / M") {
    CHECK(per_token_cap(g, g.uk) == doctest::Approx(g.uk / 2.0).epsilon(1e-14));
  }
  SUBCASE("t = 0 gives exp(tau) / Z_A") {
    CHECK(per_token_cap(g, 0.0) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-14));
    CHECK(per_token_cap(g, 0.0) == doctest::Approx(g.uk / (2.0 * (1.0 - g.uk))).epsilon(1e-14));
  }
  SUBCASE("t = 0.2 by direct weight construction") {
    // Tail weights summing to Z_A t / (1 - t); the heaviest allowed is exp(tau).
    const double za = e + 1.0, t = 0.2;
    const double total = za + za * t / (1.0 - t);
    CHECK(per_token_cap(g, t) == doctest::Approx(1.0 / total).epsilon(1e-14));
    CHECK(std::abs(per_token_cap(g, t) - 0.21522) < 1e-3);
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(per_token_cap(g, -0.01), Error);
    CHECK_THROWS_AS(per_token_cap(g, g.uk + 1e-6), Error);
    CHECK_THROWS_AS(per_token_cap(geom_of(2, {0.0, -1.0}), 0.0), Error);
  }
}

TEST_CASE("extremal pair") {
  SUBCASE("symmetric case") {
    const auto g = geom_of(2, {0.0});
    const auto [a, b] = extremal_pair(g);
    CHECK(a.t == 0.0);
    CHECK(b.t == doctest::Approx(0.5));
    CHECK(tv(to_distribution(g, a), to_distribution(g, b)) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("V=4 example by direct l1 summation") {
    const auto g = geom_of(4, {1.0, 0.0});
    const auto [a, b] = extremal_pair(g);
    const double d = testing::l1_half(to_distribution(g, a), to_distribution(g, b));
    CHECK(std::abs(d - g.uk) <= 1e-12);
    CHECK(membership(g, a).member);
    CHECK(membership(g, b).member);
  }
  SUBCASE("degenerate") { CHECK_THROWS_AS(extremal_pair(geom_of(2, {0.0, 0.0})), Error); }
}

TEST_CASE("membership") {
  const auto g = geom_of(5, {0.5, 0.0});
  CHECK(membership(g, FeasiblePoint::zero_tail()).member);
  CHECK(membership(g, FeasiblePoint::uniform(g.uk)).member);

  const auto over = membership(g, FeasiblePoint::uniform(g.uk + 0.01));
  CHECK_FALSE(over.member);
  REQUIRE_FALSE(over.violations.empty());
  CHECK(over.violations.front() == "tail mass exceeds U_K");

  // One censored token alone: its mass t must satisfy t <= cap(t).
  const double b = std::exp(g.summary.tau - g.summary.log_za);
  const double fixed = testing::bisect([&](double t) { return t - (1.0 - t) * b; }, 0.0, 1.0);
  const double t = std::min(g.uk, fixed);
  const TokenId u = censored_tokens(g.summary).front();
  CHECK(membership(g, FeasiblePoint{t, {{u, t}}, false}).member);
  CHECK_FALSE(membership(g, FeasiblePoint{t + 1e-6, {{u, t + 1e-6}}, false}).member);

  // Entries must add up to t.
  CHECK_FALSE(membership(g, FeasiblePoint{0.1, {{u, 0.05}}, false}).member);
  // Tail entry on a revealed token is structural misuse.
  CHECK_THROWS_AS(membership(g, FeasiblePoint{0.01, {{0, 0.01}}, false}), Error);
}

TEST_CASE("tv and kl") {
  const std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
  CHECK(tv(p, p) == 0.0);
  CHECK(kl(q, q) == 0.0);
  CHECK(tv(p, q) == doctest::Approx(0.5));
  CHECK(kl(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::isinf(kl(q, p)));
  CHECK_THROWS_AS(tv(p, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(kl(p, std::vector<double>{0.7, 0.7}), Error);
}

TEST_CASE("same-head points with disjoint tails are max(t, s) apart") {
  const auto g = geom_of(8, {1.0, 0.0});
  const auto tail = censored_tokens(g.summary);
  const double t = 0.2, s = 0.3;
  REQUIRE(t / 2 <= per_token_cap(g, t));
  FeasiblePoint a{t, {{tail[0], t / 2}, {tail[1], t / 2}}, false};
  FeasiblePoint b{s, {{tail[2], s / 3}, {tail[3], s / 3}, {tail[4], s / 3}}, false};
  CHECK(membership(g, a).member);
  CHECK(membership(g, b).member);
  CHECK(tv(to_distribution(g, a), to_distribution(g, b)) == doctest::Approx(std::max(t, s)).epsilon(1e-14));
}

TEST_CASE("brute diameter oracle") {
  CHECK(brute_diameter_oracle(geom_of(3, {0.0, 0.0, -1.0}), 20).diameter == 0.0);
  CHECK(std::abs(brute_diameter_oracle(geom_of(2, {0.0}), 20).diameter - 0.5) <= 1e-6);
  CHECK_THROWS_AS(brute_diameter_oracle(geom_of(20, {0.0}), 20), Error);
}

TEST_CASE("property: U_K is non-increasing in K") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> sc(0.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t v = 2 + rng() % 60;
    std::vector<double> z(v);
    for (double& x : z) x = sc(rng);
    std::sort(z.begin(), z.end(), std::greater<>());
    double prev = 2.0;
    for (std::size_t k = 1; k <= v; ++k) {
      const auto g = geom_of(v, std::vector<double>(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k)));
      CHECK(g.uk <= prev);
      prev = g.uk;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("property: shift invariance of U_K") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> sc(0.0, 3.0);
  std::uniform_real_distribution<double> shift(-300.0, 300.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t v = 2 + rng() % 1000;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(v - 1, 50);
    std::vector<double> s(k), moved(k);
    const double c = shift(rng);
    for (std::size_t i = 0; i < k; ++i) moved[i] = (s[i] = sc(rng)) + c;
    CHECK(std::abs(geom_of(v, s).uk - geom_of(v, moved).uk) <= 1e-12);
  }
}

TEST_CASE("property: extremal pair attains U_K; sampled pairs never exceed it") {
  std::mt19937_64 rng(9);
  std::size_t pairs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_geom(rng, 9);
    const auto [a, b] = extremal_pair(g);
    CHECK(std::abs(tv(to_distribution(g, a), to_distribution(g, b)) - g.uk) <= 1e-12);
    for (int j = 0; j < 50; ++j, ++pairs) {
      const auto p = sample_member(g, rng), q = sample_member(g, rng);
      CHECK(membership(g, p).member);
      CHECK(tv(to_distribution(g, p), to_distribution(g, q)) <= g.uk + 1e-9);
    }
  }
  CHECK(pairs >= 10000);
}

TEST_CASE("property: uniform allocation is always within the cap") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = random_geom(rng, 200);
    for (int j = 0; j <= 20; ++j) {
      const double t = g.uk * j / 20.0;
      CHECK(t / static_cast<double>(g.m()) <= per_token_cap(g, t) * (1.0 + 1e-12));
    }
  }
}
