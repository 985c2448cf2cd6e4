#include "sndropt/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sndropt {

LimiterParams::LimiterParams(double eta_, double beta_) : eta(eta_), beta(beta_) {
  if (!std::isfinite(eta) || eta == 0.0) throw std::invalid_argument("LimiterParams: eta must be finite and nonzero");
  if (!std::isfinite(beta)) throw std::invalid_argument("LimiterParams: beta must be finite");
}

Interval LimiterParams::affine_region() const {
  return eta > 0.0 ? Interval{lower_knee(), upper_knee()} : Interval{upper_knee(), lower_knee()};
}

RailPartition rail_partition(const LimiterParams& p) {
  const Interval s = p.affine_region();
  if (p.eta > 0.0) return {{-kInf, s.lo}, s, {s.hi, kInf}};
  return {{s.hi, kInf}, s, {-kInf, s.lo}};
}

namespace {

std::vector<AffinePiece> clipped_affine_pieces(double slope, double intercept, double lo_clip, double hi_clip) {
  if (slope == 0.0 || lo_clip == hi_clip) {
    return {{-kInf, kInf, std::clamp(intercept, lo_clip, hi_clip), 0.0}};
  }
  const double at_lo = (lo_clip - intercept) / slope;
  const double at_hi = (hi_clip - intercept) / slope;
  if (slope > 0.0) {
    return {{-kInf, at_lo, lo_clip, 0.0}, {at_lo, at_hi, intercept, slope}, {at_hi, kInf, hi_clip, 0.0}};
  }
  return {{-kInf, at_hi, hi_clip, 0.0}, {at_hi, at_lo, intercept, slope}, {at_lo, kInf, lo_clip, 0.0}};
}

AffinePiece through(const MappingKnot& a, const MappingKnot& b) {
  const double slope = (b.value - a.value) / (b.gamma - a.gamma);
  return {a.gamma, b.gamma, a.value - slope * a.gamma, slope};
}

}  // namespace

NonlinearMapping::NonlinearMapping(std::variant<LimiterParams, Affine, Table> spec) : spec_(std::move(spec)) {
  if (const auto* p = std::get_if<LimiterParams>(&spec_)) {
    pieces_ = clipped_affine_pieces(1.0 / p->eta, p->beta, 0.0, 1.0);
  } else if (const auto* a = std::get_if<Affine>(&spec_)) {
    pieces_ = clipped_affine_pieces(a->slope, a->intercept, a->lo_clip, a->hi_clip);
  } else {
    const auto& k = std::get<Table>(spec_).knots;
    pieces_.push_back({-kInf, k.front().gamma, k.front().value, 0.0});
    for (std::size_t i = 0; i + 1 < k.size(); ++i) pieces_.push_back(through(k[i], k[i + 1]));
    pieces_.push_back({k.back().gamma, kInf, k.back().value, 0.0});
  }
}

NonlinearMapping NonlinearMapping::optimal_limiter(const LimiterParams& p) { return NonlinearMapping(p); }

NonlinearMapping NonlinearMapping::affine_clipped(double slope, double intercept, double lo_clip, double hi_clip) {
  if (!std::isfinite(slope) || !std::isfinite(intercept))
    throw std::invalid_argument("affine_clipped: slope and intercept must be finite");
  if (!(lo_clip >= 0.0 && lo_clip <= hi_clip && hi_clip <= 1.0))
    throw std::invalid_argument("affine_clipped: clips must satisfy 0 <= lo <= hi <= 1");
  return NonlinearMapping(Affine{slope, intercept, lo_clip, hi_clip});
}

NonlinearMapping NonlinearMapping::tabulated(std::vector<MappingKnot> knots) {
  if (knots.size() < 2) throw std::invalid_argument("tabulated mapping: need at least two knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].gamma) || !std::isfinite(knots[i].value))
      throw std::invalid_argument("tabulated mapping: non-finite knot");
    if (i > 0 && !(knots[i].gamma > knots[i - 1].gamma))
      throw std::invalid_argument("tabulated mapping: gamma must be strictly increasing");
  }
  // Insert rail crossings so that clamping the knot values is exact.
  std::vector<MappingKnot> out{knots.front()};
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto& a = knots[i];
    const auto& b = knots[i + 1];
    std::vector<MappingKnot> cross;
    for (double rail : {0.0, 1.0}) {
      if ((a.value - rail) * (b.value - rail) < 0.0) {
        cross.push_back({a.gamma + (rail - a.value) * (b.gamma - a.gamma) / (b.value - a.value), rail});
      }
    }
    std::sort(cross.begin(), cross.end(), [](const auto& x, const auto& y) { return x.gamma < y.gamma; });
    for (const auto& c : cross) {
      if (c.gamma > out.back().gamma && c.gamma < b.gamma) out.push_back(c);
    }
    out.push_back(b);
  }
  for (auto& k : out) k.value = std::clamp(k.value, 0.0, 1.0);
  return NonlinearMapping(Table{std::move(out)});
}

NonlinearMapping NonlinearMapping::reference_g2() { return affine_clipped(1.0, 0.4, 0.0, 1.0); }

MappingForm NonlinearMapping::form() const {
  switch (spec_.index()) {
    case 0:
      return MappingForm::optimal_limiter;
    case 1:
      return MappingForm::affine_clipped;
    default:
      return MappingForm::tabulated;
  }
}

double NonlinearMapping::operator()(double gamma) const {
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), gamma,
                             [](double g, const AffinePiece& p) { return g < p.hi; });
  if (it == pieces_.end()) --it;
  return std::clamp(it->intercept + it->slope * gamma, 0.0, 1.0);
}

std::vector<double> NonlinearMapping::knees() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) out.push_back(pieces_[i].hi);
  return out;
}

std::string NonlinearMapping::describe() const {
  std::ostringstream s;
  s.precision(12);
  if (const auto* p = limiter()) {
    s << "limiter(eta=" << p->eta << ", beta=" << p->beta << ")";
  } else if (const auto* a = std::get_if<Affine>(&spec_)) {
    s << "affine(slope=" << a->slope << ", intercept=" << a->intercept << ", clip=[" << a->lo_clip << ", "
      << a->hi_clip << "])";
  } else {
    s << "tabulated(" << std::get<Table>(spec_).knots.size() << " knots)";
  }
  return s.str();
}

namespace {

BussgangReport make_report(double e_g, double e_gg, double e_g2, double t) {
  const double distortion = std::max(0.0, e_g2 - e_gg * e_gg - e_g * e_g);
  const double num = e_gg * e_gg;
  Sndr s = Sndr::finite(0.0);
  // a gain below quadrature resolution is a constant mapping
  if (std::abs(e_gg) > QuadratureOptions{}.abs_tol) {
    if (t == 0.0 && distortion <= QuadratureOptions{}.abs_tol)
      s = Sndr::infinite();
    else
      s = Sndr::finite(num / (distortion + t));
  }
  return {e_gg, distortion, e_g, e_g2, t, s};
}

void check_noise_ratio(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("bussgang: noise ratio t must be >= 0");
}

}  // namespace

BussgangReport bussgang(const NonlinearMapping& m, const InputDistribution& dist, double t,
                        const QuadratureOptions& opts) {
  return bussgang(m.pieces(), dist, t, opts);
}

BussgangReport bussgang(std::span<const AffinePiece> pieces, const InputDistribution& dist, double t,
                        const QuadratureOptions& opts) {
  check_noise_ratio(t);
  double e_g = 0.0, e_gg = 0.0, e_g2 = 0.0;
  for (const auto& piece : pieces) {
    const auto c = partial_moments(dist, {piece.lo, piece.hi}, opts);
    const double a = piece.intercept, b = piece.slope;
    e_g += a * c.c0 + b * c.c1;
    e_gg += a * c.c1 + b * c.c2;
    e_g2 += a * a * c.c0 + 2.0 * a * b * c.c1 + b * b * c.c2;
  }
  return make_report(e_g, e_gg, e_g2, t);
}

BussgangReport bussgang(const std::function<double(double)>& g, std::span<const double> breakpoints,
                        const InputDistribution& dist, double t, const QuadratureOptions& opts) {
  check_noise_ratio(t);
  const Interval qs = dist.quadrature_support();
  std::vector<double> breaks(dist.breakpoints().begin(), dist.breakpoints().end());
  breaks.insert(breaks.end(), breakpoints.begin(), breakpoints.end());
  auto f = [&](double x) {
    const double p = dist.pdf(x);
    const double v = g(x);
    return std::array<double, 3>{p * v, p * x * v, p * v * v};
  };
  const auto r = integrate_panels<3>(f, qs.lo, qs.hi, breaks, opts);
  return make_report(r[0], r[1], r[2], t);
}

double sndr_physical(const NonlinearMapping& m, const InputDistribution& dist, double range, double sigma_x,
                     double sigma_v2) {
  if (!(range > 0.0) || !(sigma_x > 0.0) || !(sigma_v2 >= 0.0))
    throw std::invalid_argument("sndr_physical: need A > 0, sigma_x > 0, sigma_v2 >= 0");
  const Interval qs = dist.quadrature_support();
  std::vector<double> breaks;
  for (double b : dist.breakpoints()) breaks.push_back(sigma_x * b);
  for (double k : m.knees()) breaks.push_back(sigma_x * k);
  auto f = [&](double x) {
    const double px = dist.pdf(x / sigma_x) / sigma_x;
    const double h = range * m(x / sigma_x);
    return std::array<double, 3>{px * h, px * x * h, px * h * h};
  };
  const auto r = integrate_panels<3>(f, sigma_x * qs.lo, sigma_x * qs.hi, breaks);
  const double var_x = sigma_x * sigma_x;
  const double alpha = r[1] / var_x;
  const double eps_d = r[2] - alpha * alpha * var_x - r[0] * r[0];
  return alpha * alpha * var_x / (eps_d + sigma_v2);
}

double sndr_db(const Sndr& s) {
  if (s.is_infinite()) return kInf;
  if (s.linear() <= 0.0) return -kInf;
  return 10.0 * std::log10(s.linear());
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double noise_ratio_from_dsnr_db(double dsnr_db) { return std::pow(10.0, -dsnr_db / 10.0); }

}  // namespace sndropt
