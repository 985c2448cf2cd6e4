#pragma once

#include <cmath>
#include <utility>

namespace sndropt::detail {

struct RootResult {
  double x;
  int iterations;
};

/// Newton steps with a finite-difference slope, falling back to bisection
/// whenever the step leaves the bracket or stalls. f(lo) and f(hi) must have
/// opposite signs.
template <class F>
RootResult safeguarded_root(F&& f, double lo, double hi, double flo, double fhi, int max_iter = 300) {
  if (flo > 0.0) {
    std::swap(lo, hi);
    std::swap(flo, fhi);
  }
  // Now f(lo) < 0 < f(hi); lo may exceed hi.
  double x = 0.5 * (lo + hi);
  double fx = f(x);
  double prev_width = std::abs(hi - lo);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (fx == 0.0) break;
    (fx < 0.0 ? lo : hi) = x;
    const double width = std::abs(hi - lo);
    if (width <= 4e-16 * std::max(1.0, std::abs(x))) break;

    const double h = 1e-7 * std::max(1.0, std::abs(x));
    const double slope = (f(x + h) - fx) / h;
    double next = x - fx / slope;
    const bool inside = std::isfinite(next) && (next - lo) * (next - hi) < 0.0;
    if (!inside || width > 0.5 * prev_width) next = 0.5 * (lo + hi);
    prev_width = width;
    if (next == x) break;
    x = next;
    fx = f(x);
  }
  return {x, it};
}

}  // namespace sndropt::detail
