#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sndropt {

struct QuadratureOptions {
  /// Absolute error target for a whole integral.
  double abs_tol = 1e-10;
  int max_depth = 30;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendreRule make_gauss_legendre(int n);

/// Cached 10- and 20-point rules used by the adaptive integrator.
const GaussLegendreRule& gl_coarse();
const GaussLegendreRule& gl_fine();

namespace detail {

template <std::size_t N, class F>
std::array<double, N> apply_rule(const GaussLegendreRule& rule, F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  std::array<double, N> acc{};
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const std::array<double, N> v = f(mid + half * rule.nodes[i]);
    for (std::size_t k = 0; k < N; ++k) acc[k] += rule.weights[i] * v[k];
  }
  for (auto& x : acc) x *= half;
  return acc;
}

template <std::size_t N, class F>
void adaptive_panel(F& f, double a, double b, double tol, int depth, int max_depth,
                    std::array<double, N>& out) {
  const auto coarse = apply_rule<N>(gl_coarse(), f, a, b);
  const auto fine = apply_rule<N>(gl_fine(), f, a, b);
  double err = 0.0;
  for (std::size_t k = 0; k < N; ++k) err = std::max(err, std::abs(fine[k] - coarse[k]));
  if (err <= tol || depth >= max_depth) {
    for (std::size_t k = 0; k < N; ++k) out[k] += fine[k];
    return;
  }
  const double m = 0.5 * (a + b);
  adaptive_panel<N>(f, a, m, 0.5 * tol, depth + 1, max_depth, out);
  adaptive_panel<N>(f, m, b, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace detail

/// Adaptive Gauss-Legendre integration of a vector-valued integrand over
/// [lo, hi], split first at the given interior breakpoints so each panel is
/// smooth. Each panel compares the 10- and 20-point rules and bisects until
/// they agree to its share of the tolerance; the 20-point value is kept.
template <std::size_t N, class F>
std::array<double, N> integrate_panels(F&& f, double lo, double hi, std::span<const double> breaks,
                                       const QuadratureOptions& opts = {}) {
  std::array<double, N> out{};
  if (!(hi > lo)) return out;
  std::vector<double> cuts;
  cuts.reserve(breaks.size() + 2);
  cuts.push_back(lo);
  for (double b : breaks)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  const double width = hi - lo;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    detail::adaptive_panel<N>(f, a, b, opts.abs_tol * (b - a) / width, 0, opts.max_depth, out);
  }
  return out;
}

template <class F>
double integrate(F&& f, double lo, double hi, std::span<const double> breaks = {},
                 const QuadratureOptions& opts = {}) {
  auto wrapped = [&f](double x) { return std::array<double, 1>{f(x)}; };
  return integrate_panels<1>(wrapped, lo, hi, breaks, opts)[0];
}

}  // namespace sndropt
