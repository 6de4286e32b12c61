#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

namespace censet::detail {

/// Golden-section maximization of f on [lo, hi]; returns (argmax, max).
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int iter = 0; iter < 200 && (b - a) > tol; ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Grid over [0, hi] followed by golden refinement around the best node.
/// Endpoints are always evaluated.
template <class F>
std::pair<double, double> grid_then_golden_max(F&& f, double hi, std::size_t grid, double tol) {
  if (grid < 2) grid = 2;
  std::size_t best = 0;
  double best_val = f(0.0);
  for (std::size_t i = 1; i <= grid; ++i) {
    const double x = hi * static_cast<double>(i) / static_cast<double>(grid);
    const double v = f(x);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double arg = hi * static_cast<double>(best) / static_cast<double>(grid);
  const double lo = hi * static_cast<double>(best == 0 ? 0 : best - 1) / static_cast<double>(grid);
  const double up = hi * static_cast<double>(best == grid ? grid : best + 1) / static_cast<double>(grid);
  auto [x, v] = golden_max(f, lo, up, tol);
  if (v > best_val) {
    best_val = v;
    arg = x;
  }
  return {arg, best_val};
}

}  // namespace censet::detail
