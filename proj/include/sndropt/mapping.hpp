#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sndropt/dist.hpp"

namespace sndropt {

/// Gain/bias pair of a double-sided limiter g(gamma) = clip(gamma/eta + beta).
/// 1/eta is the linear gain of the affine segment and beta the normalized DC
/// bias. Knee names follow the eta > 0 orientation: g reaches 0 at
/// lower_knee() and 1 at upper_knee(). For eta < 0 the order is reversed.
struct LimiterParams {
  double eta;
  double beta;

  LimiterParams(double eta_, double beta_);

  double lower_knee() const { return -beta * eta; }
  double upper_knee() const { return eta - beta * eta; }
  /// Open interval on which 0 < g < 1.
  Interval affine_region() const;
};

/// Rail-0 (L), affine (S) and rail-1 (U) regions induced by a limiter.
struct RailPartition {
  Interval zero_rail;
  Interval affine;
  Interval one_rail;
};

RailPartition rail_partition(const LimiterParams& p);

/// g = intercept + slope * gamma on [lo, hi].
struct AffinePiece {
  double lo;
  double hi;
  double intercept;
  double slope;
};

struct MappingKnot {
  double gamma;
  double value;
};

enum class MappingForm { optimal_limiter, affine_clipped, tabulated };

/// Normalized nonlinearity g: R -> [0, 1].
class NonlinearMapping {
 public:
  static NonlinearMapping optimal_limiter(const LimiterParams& p);
  /// clamp(slope * gamma + intercept, lo_clip, hi_clip), 0 <= lo_clip <= hi_clip <= 1.
  static NonlinearMapping affine_clipped(double slope, double intercept, double lo_clip = 0.0, double hi_clip = 1.0);
  /// Piecewise-linear through the knots, held constant outside them and
  /// clamped to [0, 1].
  static NonlinearMapping tabulated(std::vector<MappingKnot> knots);
  /// Fixed comparison mapping: 0 below -0.4, gamma + 0.4 up to 0.6, 1 above.
  static NonlinearMapping reference_g2();

  MappingForm form() const;
  double operator()(double gamma) const;
  /// Affine pieces covering the whole real line, split at every knee.
  std::span<const AffinePiece> pieces() const { return pieces_; }
  /// Interior points where g is not smooth.
  std::vector<double> knees() const;
  /// Limiter parameters when the form is optimal_limiter.
  const LimiterParams* limiter() const { return std::get_if<LimiterParams>(&spec_); }
  std::string describe() const;

 private:
  struct Affine {
    double slope, intercept, lo_clip, hi_clip;
  };
  struct Table {
    std::vector<MappingKnot> knots;
  };

  explicit NonlinearMapping(std::variant<LimiterParams, Affine, Table> spec);

  std::variant<LimiterParams, Affine, Table> spec_;
  std::vector<AffinePiece> pieces_;
};

/// eval_mapping
inline double eval_mapping(const NonlinearMapping& m, double gamma) { return m(gamma); }

/// SNDR with an explicit tag for the distortionless, noiseless case.
class Sndr {
 public:
  static Sndr finite(double v) { return Sndr(v, false); }
  static Sndr infinite() { return Sndr(kInf, true); }

  bool is_infinite() const { return infinite_; }
  /// Linear value; +infinity when is_infinite().
  double linear() const { return value_; }

 private:
  Sndr(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

/// Bussgang decomposition of g(gamma) in normalized units (A = sigma_x = 1).
struct BussgangReport {
  double alpha;             // E[gamma g(gamma)]
  double distortion_power;  // E[g^2] - alpha^2 - E[g]^2
  double mean_out;          // E[g]
  double second_moment;     // E[g^2]
  double noise_ratio;       // t
  Sndr sndr;
};

/// SNDR = E^2[gamma g] / (var[g] - E^2[gamma g] + t) by exact per-piece
/// partial moments.
BussgangReport bussgang(const NonlinearMapping& m, const InputDistribution& dist, double t,
                        const QuadratureOptions& opts = {});

/// Same decomposition for a mapping given directly as affine pieces. The
/// pieces must be disjoint; together they may cover only part of the line, in
/// which case g is taken as 0 elsewhere.
BussgangReport bussgang(std::span<const AffinePiece> pieces, const InputDistribution& dist, double t,
                        const QuadratureOptions& opts = {});

/// Same decomposition for an arbitrary g, integrated by adaptive quadrature.
/// breakpoints mark points where g is not smooth.
BussgangReport bussgang(const std::function<double(double)>& g, std::span<const double> breakpoints,
                        const InputDistribution& dist, double t, const QuadratureOptions& opts = {});

/// SNDR in physical units for h(x) = A g(x / sigma_x) with noise variance
/// sigma_v2, integrated over x directly.
double sndr_physical(const NonlinearMapping& m, const InputDistribution& dist, double range, double sigma_x,
                     double sigma_v2);

/// 10 log10(sndr); -inf at 0 and +inf for the infinite tag.
double sndr_db(const Sndr& s);
inline double sndr_db(const BussgangReport& r) { return sndr_db(r.sndr); }

double db_to_linear(double db);
/// t = sigma_v^2 / A^2 for a DSNR given in dB.
double noise_ratio_from_dsnr_db(double dsnr_db);

// ---------------------------------------------------------------------------
// Predistortion

struct DeviceKnot {
  double drive;
  double output;
};

/// Monotone device transfer u: drive -> normalized output, interpolated by a
/// monotone piecewise cubic (Fritsch-Carlson).
class DeviceCurve {
 public:
  /// Outputs are normalized as (output - turn_on) / (saturation - turn_on).
  /// Without explicit levels the first and last outputs are used.
  static DeviceCurve from_knots(std::vector<DeviceKnot> knots, std::optional<double> turn_on = std::nullopt,
                                std::optional<double> saturation = std::nullopt);

  double response(double drive) const;
  /// Drive producing the normalized level in [0, 1].
  double inverse(double level) const;
  Interval drive_domain() const { return {drive_.front(), drive_.back()}; }

 private:
  std::vector<double> drive_;
  std::vector<double> level_;
  std::vector<double> slope_;
};

DeviceCurve load_device_curve(std::istream& in, std::optional<double> turn_on = std::nullopt,
                              std::optional<double> saturation = std::nullopt);

struct LutPoint {
  double gamma;
  double drive;
};

/// gamma -> drive table realizing u(f(gamma)) = g(gamma). Points span the
/// region where 0 < g < 1; outside it the rail drives apply.
struct PredistortionLut {
  std::vector<LutPoint> points;
  double drive_below;  // for gamma before the first point
  double drive_above;  // for gamma after the last point

  double drive_at(double gamma) const;
};

PredistortionLut predistort_curve(const DeviceCurve& device, const NonlinearMapping& m, int n_points);

/// sup |u(f(gamma)) - g(gamma)| over n_probes evenly spaced points in range.
double composition_error(const DeviceCurve& device, const PredistortionLut& lut, const NonlinearMapping& m,
                         Interval range, int n_probes);

void write_lut_csv(std::ostream& out, const PredistortionLut& lut);

}  // namespace sndropt
