#pragma once

#include <optional>
#include <string>

#include "sndropt/dist.hpp"
#include "sndropt/mapping.hpp"
#include "sndropt/solver.hpp"

namespace sndropt {

enum class LogBase { nats, bits };

const char* to_string(LogBase b);
/// Converts a value in nats to the requested base.
double in_base(double nats, LogBase base);

struct CapacityBounds {
  double lower_nats;
  double upper_nats;
  double dsnr;
  LogBase log_base;

  double lower() const { return in_base(lower_nats, log_base); }
  double upper() const { return in_base(upper_nats, log_base); }
};

/// 1/2 ln(1 + sndr). Infinite SNDR maps to an infinite rate.
double lower_bound(const Sndr& sndr);

/// 1/2 ln(1 + SNDR(mapping, dist, t)).
double lower_bound(const InputDistribution& dist, double t, const NonlinearMapping& mapping);

/// Tightest instance: the optimal limiter for a standard Gaussian input.
double lower_bound_optimal(double t);

/// 1/2 ln(1 + dsnr / 4).
double upper_bound(double dsnr);

/// Universal SNDR ceiling 1 / (4t).
double sndr_cap(double t);

/// Both bounds at one DSNR (linear), with the lower bound taken from the
/// Gaussian-input optimal limiter.
CapacityBounds capacity_bounds(double dsnr, LogBase base = LogBase::nats);

}  // namespace sndropt
