#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sndropt/quadrature.hpp"

namespace sndropt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval on the extended real line. Endpoints may be +/-infinity.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  static Interval whole() { return {}; }
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// E[gamma^k * 1{gamma in set}] for k = 0, 1, 2.
struct PartialMoments {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  PartialMoments& operator+=(const PartialMoments& o) {
    c0 += o.c0;
    c1 += o.c1;
    c2 += o.c2;
    return *this;
  }
  friend PartialMoments operator+(PartialMoments a, const PartialMoments& b) { return a += b; }
  friend PartialMoments operator-(PartialMoments a, const PartialMoments& b) {
    return {a.c0 - b.c0, a.c1 - b.c1, a.c2 - b.c2};
  }
};

enum class DistKind { uniform_symmetric, standard_gaussian, tabulated };

struct PdfKnot {
  double gamma;
  double density;
};

/// Normalized input distribution p(gamma), zero mean and unit variance.
///
/// Uniform and tabulated densities are piecewise linear and their moments
/// are integrated exactly. The Gaussian is integrated by adaptive
/// Gauss-Legendre on [-T, T] where the mass beyond +/-T is below
/// tail_epsilon.
class InputDistribution {
 public:
  static InputDistribution uniform_symmetric();
  static InputDistribution standard_gaussian(double tail_epsilon = 1e-14);
  /// Piecewise-linear density through the knots. The table must already be
  /// normalized; see load_tabulated_pdf() for opt-in standardization.
  static InputDistribution tabulated(std::vector<PdfKnot> knots);

  DistKind kind() const { return kind_; }
  /// Nominal support; unbounded for the Gaussian.
  Interval support() const;
  /// Support actually integrated over (Gaussian truncated at +/-T).
  Interval quadrature_support() const { return {knots_.front().gamma, knots_.back().gamma}; }
  double tail_epsilon() const { return tail_epsilon_; }

  double pdf(double gamma) const;
  double cdf(double gamma) const;
  /// Inverse CDF for u in [0, 1].
  double quantile(double u) const;

  /// Knots of the piecewise-linear density (for the Gaussian: the
  /// truncation points).
  std::span<const PdfKnot> knots() const { return knots_; }
  /// Points inside the quadrature support where the density is not smooth,
  /// plus panel cuts used to keep Gaussian panels short.
  std::span<const double> breakpoints() const { return breaks_; }

  bool piecewise_linear() const { return kind_ != DistKind::standard_gaussian; }

 private:
  InputDistribution() = default;

  DistKind kind_ = DistKind::tabulated;
  std::vector<PdfKnot> knots_;
  std::vector<double> cum_mass_;
  std::vector<double> breaks_;
  double tail_epsilon_ = 0.0;
};

/// E[gamma^order * 1{gamma in set}]. order must be 0, 1 or 2.
double partial_moment(const InputDistribution& dist, int order, Interval set,
                      const QuadratureOptions& opts = {});

/// All three partial moments over one interval.
PartialMoments partial_moments(const InputDistribution& dist, Interval set,
                               const QuadratureOptions& opts = {});

/// Integral of f(gamma) p(gamma) over set. Extra breakpoints mark
/// non-smooth points of f.
template <class F>
double expectation(const InputDistribution& dist, F&& f, Interval set,
                   std::span<const double> extra_breaks = {}, const QuadratureOptions& opts = {}) {
  const Interval qs = dist.quadrature_support();
  const double lo = std::max(set.lo, qs.lo);
  const double hi = std::min(set.hi, qs.hi);
  if (!(hi > lo)) return 0.0;
  std::vector<double> breaks(dist.breakpoints().begin(), dist.breakpoints().end());
  breaks.insert(breaks.end(), extra_breaks.begin(), extra_breaks.end());
  return integrate([&](double x) { return f(x) * dist.pdf(x); }, lo, hi, breaks, opts);
}

/// True when the density is even: the first moments over the two half-lines
/// cancel within tol.
bool is_symmetric(const InputDistribution& dist, double tol = 1e-8);

/// Affine standardization applied by the loader: gamma_new = (gamma_old -
/// mean) / scale, density rescaled by scale / mass.
struct Standardization {
  double mass;
  double mean;
  double scale;
};

struct LoadedPdf {
  InputDistribution dist;
  std::optional<Standardization> applied;
};

/// Reads a `gamma,density` CSV. With renormalize set, the table is scaled to
/// unit mass and standardized to zero mean and unit variance; the applied
/// transform is returned and written to diagnostics when given.
LoadedPdf load_tabulated_pdf(std::istream& in, bool renormalize, std::ostream* diagnostics = nullptr);

/// Physical-to-normalized bookkeeping for y_o = h_o(x_o) + v with
/// A1 <= h_o <= A2. The normalized system has x = x_o - mu_x and
/// h = h_o - A1 with range A = A2 - A1.
struct ChannelSpec {
  double turn_on;     // A1
  double saturation;  // A2
  double sigma_x;
  double input_shift;  // added to x_o, equals -mu_x

  double range() const { return saturation - turn_on; }
  /// t = sigma_v^2 / A^2
  double noise_ratio(double sigma_v2) const { return sigma_v2 / (range() * range()); }
  /// DSNR = A^2 / sigma_v^2
  double dsnr(double sigma_v2) const { return range() * range() / sigma_v2; }
  double normalized_input(double x_o) const { return (x_o + input_shift) / sigma_x; }
  double physical_output(double g) const { return turn_on + range() * g; }
};

ChannelSpec normalize_channel(double mu_x, double sigma_x, double a1, double a2);

}  // namespace sndropt
