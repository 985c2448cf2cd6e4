#include "sndropt/capacity.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sndropt {

const char* to_string(LogBase b) { return b == LogBase::nats ? "nats" : "bits"; }

double in_base(double nats, LogBase base) { return base == LogBase::nats ? nats : nats / std::numbers::ln2; }

double lower_bound(const Sndr& sndr) {
  if (sndr.is_infinite()) return kInf;
  if (!(sndr.linear() >= 0.0)) throw std::invalid_argument("lower_bound: SNDR must be >= 0");
  return 0.5 * std::log1p(sndr.linear());
}

double lower_bound(const InputDistribution& dist, double t, const NonlinearMapping& mapping) {
  if (!(t > 0.0)) throw std::invalid_argument("lower_bound: t must be > 0");
  return lower_bound(bussgang(mapping, dist, t).sndr);
}

double lower_bound_optimal(double t) {
  const auto gauss = InputDistribution::standard_gaussian();
  const auto outcome = solve_symmetric(gauss, t, Branch::positive);
  return lower_bound(Sndr::finite(outcome.sndr_star));
}

double upper_bound(double dsnr) {
  if (!(dsnr >= 0.0)) throw std::invalid_argument("upper_bound: dsnr must be >= 0");
  return 0.5 * std::log1p(dsnr / 4.0);
}

double sndr_cap(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("sndr_cap: t must be > 0");
  return 1.0 / (4.0 * t);
}

CapacityBounds capacity_bounds(double dsnr, LogBase base) {
  if (!(dsnr > 0.0)) throw std::invalid_argument("capacity_bounds: dsnr must be > 0");
  return {lower_bound_optimal(1.0 / dsnr), upper_bound(dsnr), dsnr, base};
}

}  // namespace sndropt
