#include "sndropt/dist.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sndropt {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double gaussian_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Smallest T with P(|gamma| > T) < eps.
double gaussian_truncation(double eps) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::numbers::sqrt2) < eps)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// Exact integral of x^k * p(x) over [u, v] where p is linear on the segment.
// Two-point Gauss-Legendre is exact for the cubic integrand.
std::array<double, 3> linear_segment_moments(const PdfKnot& k0, const PdfKnot& k1, double u, double v) {
  static const double node = 1.0 / std::sqrt(3.0);
  const double slope = (k1.density - k0.density) / (k1.gamma - k0.gamma);
  const double half = 0.5 * (v - u), mid = 0.5 * (u + v);
  std::array<double, 3> out{};
  for (double s : {-node, node}) {
    const double x = mid + half * s;
    const double p = k0.density + slope * (x - k0.gamma);
    out[0] += half * p;
    out[1] += half * p * x;
    out[2] += half * p * x * x;
  }
  return out;
}

void check_interval(Interval set) {
  if (std::isnan(set.lo) || std::isnan(set.hi) || set.lo > set.hi)
    throw std::invalid_argument("partial_moment: malformed interval (lo > hi)");
}

}  // namespace

InputDistribution InputDistribution::uniform_symmetric() {
  InputDistribution d;
  d.kind_ = DistKind::uniform_symmetric;
  const double p = 1.0 / (2.0 * kSqrt3);
  d.knots_ = {{-kSqrt3, p}, {kSqrt3, p}};
  d.cum_mass_ = {0.0, 1.0};
  return d;
}

InputDistribution InputDistribution::standard_gaussian(double tail_epsilon) {
  if (!(tail_epsilon > 0.0 && tail_epsilon < 1e-3))
    throw std::invalid_argument("standard_gaussian: tail_epsilon must be in (0, 1e-3)");
  InputDistribution d;
  d.kind_ = DistKind::standard_gaussian;
  d.tail_epsilon_ = tail_epsilon;
  const double t = gaussian_truncation(tail_epsilon);
  d.knots_ = {{-t, gaussian_pdf(t)}, {t, gaussian_pdf(t)}};
  // Unit-width panels keep the 20-point rule near machine precision.
  for (double x = std::ceil(-t); x < t; x += 1.0) d.breaks_.push_back(x);
  return d;
}

InputDistribution InputDistribution::tabulated(std::vector<PdfKnot> knots) {
  if (knots.size() < 2) throw std::invalid_argument("tabulated pdf: need at least two knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].gamma) || !std::isfinite(knots[i].density))
      throw std::invalid_argument("tabulated pdf: non-finite value");
    if (knots[i].density < 0.0) throw std::invalid_argument("tabulated pdf: negative density");
    if (i > 0 && !(knots[i].gamma > knots[i - 1].gamma))
      throw std::invalid_argument("tabulated pdf: gamma grid is not strictly increasing");
  }
  InputDistribution d;
  d.kind_ = DistKind::tabulated;
  d.knots_ = std::move(knots);
  d.cum_mass_.assign(d.knots_.size(), 0.0);
  for (std::size_t i = 1; i < d.knots_.size(); ++i) {
    d.cum_mass_[i] = d.cum_mass_[i - 1] +
                     0.5 * (d.knots_[i].density + d.knots_[i - 1].density) * (d.knots_[i].gamma - d.knots_[i - 1].gamma);
    if (i + 1 < d.knots_.size()) d.breaks_.push_back(d.knots_[i].gamma);
  }
  const auto m = partial_moments(d, Interval::whole());
  if (std::abs(m.c0 - 1.0) > 1e-9) throw std::invalid_argument("tabulated pdf: mass is not 1 (use renormalize)");
  if (std::abs(m.c1) > 1e-6) throw std::invalid_argument("tabulated pdf: mean is not 0 (use renormalize)");
  if (std::abs(m.c2 - 1.0) > 1e-6) throw std::invalid_argument("tabulated pdf: variance is not 1 (use renormalize)");
  return d;
}

Interval InputDistribution::support() const {
  if (kind_ == DistKind::standard_gaussian) return Interval::whole();
  return quadrature_support();
}

double InputDistribution::pdf(double gamma) const {
  if (kind_ == DistKind::standard_gaussian) return gaussian_pdf(gamma);
  if (gamma < knots_.front().gamma || gamma > knots_.back().gamma) return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), gamma,
                             [](double g, const PdfKnot& k) { return g < k.gamma; });
  if (it == knots_.end()) return knots_.back().density;
  const auto& k1 = *it;
  const auto& k0 = *(it - 1);
  const double w = (gamma - k0.gamma) / (k1.gamma - k0.gamma);
  return k0.density + w * (k1.density - k0.density);
}

double InputDistribution::cdf(double gamma) const {
  if (kind_ == DistKind::standard_gaussian) return 0.5 * std::erfc(-gamma / std::numbers::sqrt2);
  if (gamma <= knots_.front().gamma) return 0.0;
  if (gamma >= knots_.back().gamma) return cum_mass_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), gamma,
                             [](double g, const PdfKnot& k) { return g < k.gamma; });
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const auto seg = linear_segment_moments(knots_[i], knots_[i + 1], knots_[i].gamma, gamma);
  return cum_mass_[i] + seg[0];
}

double InputDistribution::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("quantile: u outside [0, 1]");
  if (kind_ == DistKind::standard_gaussian) {
    double lo = knots_.front().gamma, hi = knots_.back().gamma;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  const double target = u * cum_mass_.back();
  auto it = std::lower_bound(cum_mass_.begin(), cum_mass_.end(), target);
  if (it == cum_mass_.begin()) return knots_.front().gamma;
  if (it == cum_mass_.end()) return knots_.back().gamma;
  const std::size_t i = static_cast<std::size_t>(it - cum_mass_.begin()) - 1;
  // Solve p0*x + 0.5*s*x^2 = r for x in [0, h].
  const double h = knots_[i + 1].gamma - knots_[i].gamma;
  const double p0 = knots_[i].density;
  const double s = (knots_[i + 1].density - p0) / h;
  const double r = target - cum_mass_[i];
  double x;
  if (std::abs(s) * h < 1e-12 * std::max(p0, 1e-300)) {
    x = p0 > 0.0 ? r / p0 : 0.0;
  } else {
    const double disc = std::max(0.0, p0 * p0 + 2.0 * s * r);
    x = 2.0 * r / (p0 + std::sqrt(disc));  // stable root
  }
  return knots_[i].gamma + std::clamp(x, 0.0, h);
}

PartialMoments partial_moments(const InputDistribution& dist, Interval set, const QuadratureOptions& opts) {
  check_interval(set);
  const Interval qs = dist.quadrature_support();
  const double lo = std::max(set.lo, qs.lo);
  const double hi = std::min(set.hi, qs.hi);
  if (!(hi > lo)) return {};

  if (dist.piecewise_linear()) {
    const auto knots = dist.knots();
    std::array<double, 3> acc{};
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      const double u = std::max(lo, knots[i].gamma);
      const double v = std::min(hi, knots[i + 1].gamma);
      if (!(v > u)) continue;
      const auto seg = linear_segment_moments(knots[i], knots[i + 1], u, v);
      for (int k = 0; k < 3; ++k) acc[k] += seg[k];
    }
    return {acc[0], acc[1], acc[2]};
  }

  auto f = [](double x) {
    const double p = gaussian_pdf(x);
    return std::array<double, 3>{p, p * x, p * x * x};
  };
  const auto r = integrate_panels<3>(f, lo, hi, dist.breakpoints(), opts);
  return {r[0], r[1], r[2]};
}

double partial_moment(const InputDistribution& dist, int order, Interval set, const QuadratureOptions& opts) {
  if (order < 0 || order > 2) throw std::invalid_argument("partial_moment: order must be 0, 1 or 2");
  const auto m = partial_moments(dist, set, opts);
  return order == 0 ? m.c0 : order == 1 ? m.c1 : m.c2;
}

bool is_symmetric(const InputDistribution& dist, double tol) {
  if (dist.kind() != DistKind::tabulated) return true;
  const auto neg = partial_moments(dist, {-kInf, 0.0});
  const auto pos = partial_moments(dist, {0.0, kInf});
  return std::abs(neg.c1 + pos.c1) <= tol && std::abs(neg.c0 - pos.c0) <= tol;
}

LoadedPdf load_tabulated_pdf(std::istream& in, bool renormalize, std::ostream* diagnostics) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("pdf csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "gamma,density") throw std::invalid_argument("pdf csv: expected header 'gamma,density'");

  std::vector<PdfKnot> knots;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("pdf csv: row " + std::to_string(row) + " has no comma");
    try {
      const double g = std::stod(line.substr(0, comma));
      const double p = std::stod(line.substr(comma + 1));
      knots.push_back({g, p});
    } catch (const std::logic_error&) {
      throw std::invalid_argument("pdf csv: row " + std::to_string(row) + " is not numeric");
    }
  }
  if (knots.size() < 8) throw std::invalid_argument("pdf csv: need at least 8 knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (knots[i].density < 0.0) throw std::invalid_argument("pdf csv: negative density");
    if (i > 0 && !(knots[i].gamma > knots[i - 1].gamma))
      throw std::invalid_argument("pdf csv: gamma grid is not strictly increasing");
  }

  if (!renormalize) return {InputDistribution::tabulated(std::move(knots)), std::nullopt};

  double mass = 0.0, first = 0.0, second = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto seg = linear_segment_moments(knots[i], knots[i + 1], knots[i].gamma, knots[i + 1].gamma);
    mass += seg[0];
    first += seg[1];
    second += seg[2];
  }
  if (!(mass > 0.0)) throw std::invalid_argument("pdf csv: zero total mass");
  const double mean = first / mass;
  const double var = second / mass - mean * mean;
  if (!(var > 0.0)) throw std::invalid_argument("pdf csv: degenerate variance");
  const double scale = std::sqrt(var);
  for (auto& k : knots) {
    k.gamma = (k.gamma - mean) / scale;
    k.density *= scale / mass;
  }
  Standardization applied{mass, mean, scale};
  if (diagnostics) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "pdf standardized: mass=" << mass << " shift=" << -mean << " scale=" << scale << '\n';
    *diagnostics << msg.str();
  }
  return {InputDistribution::tabulated(std::move(knots)), applied};
}

ChannelSpec normalize_channel(double mu_x, double sigma_x, double a1, double a2) {
  if (!(sigma_x > 0.0)) throw std::invalid_argument("normalize_channel: sigma_x must be positive");
  if (!(a2 > a1)) throw std::invalid_argument("normalize_channel: saturation must exceed turn-on (A2 > A1)");
  return {a1, a2, sigma_x, -mu_x};
}

}  // namespace sndropt
