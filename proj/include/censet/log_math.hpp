#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace censet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) with the maximum subtracted first. Empty or all -inf
/// input gives -inf.
inline double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -kInf;
  const double hi = *std::max_element(x.begin(), x.end());
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

/// 1 / (1 + exp(-x)), evaluated without overflow on either side.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// x log(x / y) with 0 log 0 = 0.
inline double xlogx_over_y(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return kInf;
  return x * std::log(x / y);
}

/// Binary relative entropy d(t || s) in nats.
inline double binary_kl(double t, double s) {
  return xlogx_over_y(t, s) + xlogx_over_y(1.0 - t, 1.0 - s);
}

}  // namespace censet
