#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "censet/identified_set.hpp"

namespace censet {

/// s* balancing the zero-tail and maximal-uniform-tail adversaries, and the
/// resulting certified lower bound R_bin = -log(1 - s*) in nats.
struct BinaryReserve {
  double s_star = 0.0;
  double r_bin = 0.0;
  bool limit = false;  // U was exactly 0 or 1
};

BinaryReserve binary_reserve(double u);

/// Direct minimization over s of the larger of the two endpoint KLs:
/// coarse grid in logit(s), then golden-section refinement.
struct BalancingResult {
  double s = 0.0;
  double risk = 0.0;
};

BalancingResult balancing_oracle(double u, std::size_t grid = 1000);

/// Upper envelope on the symmetric estimator's KL at adversary tail mass t.
double g_envelope(double u, double t, double s);

struct EnvelopeMax {
  double g_max = 0.0;
  double t_argmax = 0.0;
};

/// Maximum of g_envelope(u, ., u/e) over t in [0, u].
EnvelopeMax g_max(double u);

struct MinimaxCertificate {
  double u = 0.0;
  double s_star = 0.0;
  double r_bin = 0.0;
  double g_max = 0.0;
  double g_argmax = 0.0;
  double first_order = 0.0;         // u / e
  double second_order_coeff = 0.0;  // 1/(2e) - 1/(2e^2)
};

MinimaxCertificate certify(double u);

double second_order_coefficient() noexcept;

enum class TailRule { Uniform, ReferenceWeighted };

/// Head token v gets (1 - reserve) alpha_v; censored token u gets
/// reserve * w_u. `tail_weights` is empty for Uniform (w_u = 1/M) and
/// otherwise aligned with censored_tokens(summary).
struct EstimatorSpec {
  double reserve = 0.0;
  TailRule rule = TailRule::Uniform;
  std::vector<double> tail_weights;
};

EstimatorSpec symmetric_estimator(const SetGeometry& geom, std::optional<double> reserve = {});

std::vector<double> estimator_distribution(const SetGeometry& geom, const EstimatorSpec& est);

struct BestResponse {
  FeasiblePoint point;
  double kl = 0.0;
  bool exact = true;  // false when the capped-vertex search is a heuristic
};

/// Feasible point at tail mass t maximizing KL(p || estimator).
BestResponse adversary_best_response(const SetGeometry& geom, const EstimatorSpec& est, double t);

/// O(1) KL of the uniform-tail best response; no point is materialized.
double uniform_best_response_kl(double uk, double one_minus_uk, std::size_t m,
                                double reserve, double t);

struct RiskResult {
  double sup_kl = 0.0;
  double t_argmax = 0.0;
  bool exact = true;
};

RiskResult worst_case_risk(const SetGeometry& geom, const EstimatorSpec& est,
                           std::size_t t_grid = 1000);

enum class Verdict { Impossible, Open, Threshold };

const char* to_string(Verdict verdict) noexcept;

struct CriticalVerdict {
  std::size_t k = 0;
  double uk = 0.0;
  double r_bin = 0.0;
  Verdict verdict = Verdict::Open;
  bool first_order_ok = false;  // U_K <= e * delta
};

/// Impossible when R_bin(U_K) > delta beyond the threshold band, Threshold
/// inside the band, Open otherwise.
CriticalVerdict critical_verdict(std::size_t k, double uk, double delta);
std::vector<CriticalVerdict> critical_k(std::span<const SetGeometry> sweep, double delta);

}  // namespace censet

namespace censet {

/// Best vertex found for max sum_u p_u log(p_u / q_u) subject to
/// sum p = mass and 0 <= p_u <= caps[u]. Vertices saturate every token but
/// one; two fill orders are tried. Exact when all caps and all q are equal.
struct CappedVertex {
  std::vector<double> alloc;
  double value = 0.0;
};

CappedVertex capped_vertex_search(std::span<const double> caps, std::span<const double> q,
                                  double mass);

}  // namespace censet
