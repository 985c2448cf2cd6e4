#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "sndropt/mapping.hpp"

namespace sndropt {

namespace {

constexpr double kMinLevelStep = 1e-9;

// Fritsch-Carlson endpoint derivative, kept shape preserving.
double edge_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (m * d0 <= 0.0) return 0.0;
  if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
  return m;
}

}  // namespace

DeviceCurve DeviceCurve::from_knots(std::vector<DeviceKnot> knots, std::optional<double> turn_on,
                                    std::optional<double> saturation) {
  if (knots.size() < 2) throw std::invalid_argument("device curve: need at least two knots");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].drive > knots[i - 1].drive))
      throw std::invalid_argument("device curve: drive values must be strictly increasing");
  }
  const double lo = turn_on.value_or(knots.front().output);
  const double hi = saturation.value_or(knots.back().output);
  if (!(hi > lo)) throw std::invalid_argument("device curve: saturation level must exceed turn-on level");

  DeviceCurve c;
  for (const auto& k : knots) {
    c.drive_.push_back(k.drive);
    c.level_.push_back((k.output - lo) / (hi - lo));
  }
  for (std::size_t i = 1; i < c.level_.size(); ++i) {
    if (!(c.level_[i] - c.level_[i - 1] >= kMinLevelStep))
      throw std::invalid_argument("device curve: output is not strictly increasing");
  }
  if (c.level_.front() > 1e-12 || c.level_.back() < 1.0 - 1e-12)
    throw std::invalid_argument("device curve: output range does not cover [turn-on, saturation]");

  const std::size_t n = c.drive_.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = c.drive_[i + 1] - c.drive_[i];
    d[i] = (c.level_[i + 1] - c.level_[i]) / h[i];
  }
  c.slope_.assign(n, 0.0);
  if (n == 2) {
    c.slope_[0] = c.slope_[1] = d[0];
    return c;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) continue;
    const double w1 = 2.0 * h[i] + h[i - 1];
    const double w2 = h[i] + 2.0 * h[i - 1];
    c.slope_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
  }
  c.slope_[0] = edge_slope(h[0], h[1], d[0], d[1]);
  c.slope_[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  return c;
}

double DeviceCurve::response(double drive) const {
  if (drive <= drive_.front()) return level_.front();
  if (drive >= drive_.back()) return level_.back();
  auto it = std::upper_bound(drive_.begin(), drive_.end(), drive);
  const std::size_t i = static_cast<std::size_t>(it - drive_.begin()) - 1;
  const double h = drive_[i + 1] - drive_[i];
  const double s = (drive - drive_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * level_[i] + (s3 - 2 * s2 + s) * h * slope_[i] + (-2 * s3 + 3 * s2) * level_[i + 1] +
         (s3 - s2) * h * slope_[i + 1];
}

double DeviceCurve::inverse(double level) const {
  if (level <= level_.front()) return drive_.front();
  if (level >= level_.back()) return drive_.back();
  auto it = std::upper_bound(level_.begin(), level_.end(), level);
  const std::size_t i = static_cast<std::size_t>(it - level_.begin()) - 1;
  double lo = drive_[i], hi = drive_[i + 1];
  for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (response(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DeviceCurve load_device_curve(std::istream& in, std::optional<double> turn_on, std::optional<double> saturation) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("device csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "drive,output") throw std::invalid_argument("device csv: expected header 'drive,output'");
  std::vector<DeviceKnot> knots;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("device csv: row without comma");
    try {
      knots.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::logic_error&) {
      throw std::invalid_argument("device csv: non-numeric row '" + line + "'");
    }
  }
  return DeviceCurve::from_knots(std::move(knots), turn_on, saturation);
}

double PredistortionLut::drive_at(double gamma) const {
  if (gamma <= points.front().gamma) return gamma < points.front().gamma ? drive_below : points.front().drive;
  if (gamma >= points.back().gamma) return gamma > points.back().gamma ? drive_above : points.back().drive;
  auto it = std::upper_bound(points.begin(), points.end(), gamma,
                             [](double g, const LutPoint& p) { return g < p.gamma; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (gamma - a.gamma) / (b.gamma - a.gamma);
  return a.drive + w * (b.drive - a.drive);
}

PredistortionLut predistort_curve(const DeviceCurve& device, const NonlinearMapping& m, int n_points) {
  if (n_points < 2) throw std::invalid_argument("predistort: need at least two LUT points");
  double lo = kInf, hi = -kInf;
  for (const auto& p : m.pieces()) {
    if (p.slope == 0.0) continue;
    lo = std::min(lo, p.lo);
    hi = std::max(hi, p.hi);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw std::invalid_argument("predistort: mapping has no bounded region with 0 < g < 1");

  PredistortionLut lut;
  lut.points.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double gamma = lo + (hi - lo) * i / (n_points - 1);
    lut.points.push_back({gamma, device.inverse(m(gamma))});
  }
  lut.drive_below = device.inverse(m.pieces().front().intercept);
  lut.drive_above = device.inverse(m.pieces().back().intercept);
  return lut;
}

double composition_error(const DeviceCurve& device, const PredistortionLut& lut, const NonlinearMapping& m,
                         Interval range, int n_probes) {
  if (n_probes < 2 || !(range.hi > range.lo)) throw std::invalid_argument("composition_error: bad probe grid");
  double worst = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    const double gamma = range.lo + range.width() * i / (n_probes - 1);
    worst = std::max(worst, std::abs(device.response(lut.drive_at(gamma)) - m(gamma)));
  }
  return worst;
}

void write_lut_csv(std::ostream& out, const PredistortionLut& lut) {
  const auto old = out.precision(17);
  out << "gamma,drive\n";
  for (const auto& p : lut.points) out << p.gamma << ',' << p.drive << '\n';
  out.precision(old);
}

}  // namespace sndropt
