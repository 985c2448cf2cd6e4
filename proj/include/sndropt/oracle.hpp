#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include "sndropt/dist.hpp"
#include "sndropt/mapping.hpp"

namespace sndropt {

/// n evenly spaced points on [lo, hi]; n == 1 means the single point lo.
struct GridAxis {
  double lo;
  double hi;
  int n;

  double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
  double cell() const { return n == 1 ? 0.0 : (hi - lo) / (n - 1); }
};

struct GridResult {
  double eta;
  double beta;
  double sndr;
  int evaluated;
};

/// Exhaustive evaluation of the limiter family on an eta x beta grid.
/// Points with eta == 0 are skipped.
GridResult grid_search(const InputDistribution& dist, double t, const GridAxis& eta, const GridAxis& beta);

enum class PerturbationKind { case1, case2, lemma3, bump };

const char* to_string(PerturbationKind k);

struct PerturbationReport {
  PerturbationKind kind;
  double magnitude;
  double baseline_sndr;
  double perturbed_sndr;
  std::uint64_t seed;

  double delta() const { return perturbed_sndr - baseline_sndr; }
};

/// cos^2 bump of the given amplitude and half-width added to the limiter and
/// clamped back into [0, 1].
std::function<double(double)> bumped_limiter(const LimiterParams& p, double center, double half_width,
                                             double amplitude);

/// Random localized bumps inside S. bump_scale must lie in [0, 0.05].
std::vector<PerturbationReport> perturb_function_space(const InputDistribution& dist, double t,
                                                       const LimiterParams& params, int n_trials, double bump_scale,
                                                       std::uint64_t seed);

struct ScalingFit {
  double baseline;
  double slope;      // of log|dSNDR| against log(scale)
  double r_squared;  // of that regression
  double k;          // max |dSNDR| / scale^2
  std::vector<double> deltas;
};

/// Fixed bump centred in S, evaluated at each scale; quadratic loss gives
/// slope 2.
ScalingFit stationarity_fit(const InputDistribution& dist, double t, const LimiterParams& params,
                            const std::vector<double>& scales);

/// Rails a sliver of the given width. case1 forces part of S to 0, case2
/// forces part of S to 1, lemma3 forces a sliver on the half-line opposite
/// to L (where g > 0) down to 0. position in [0, 1] places the sliver within
/// the admissible range. The perturbed SNDR is the better of the railed
/// limiter and the best affine refit on the modified regions.
PerturbationReport perturb_sets(const InputDistribution& dist, double t, const LimiterParams& params, double width,
                                PerturbationKind kind, double position = 0.0);

/// Interval in which perturb_sets may place a sliver of the given kind.
Interval sliver_room(const InputDistribution& dist, const LimiterParams& params, PerturbationKind kind);

/// n random slivers with widths up to max_fraction of sliver_room() and
/// random positions.
std::vector<PerturbationReport> random_set_perturbations(const InputDistribution& dist, double t,
                                                         const LimiterParams& params, PerturbationKind kind, int n,
                                                         double max_fraction, std::uint64_t seed);

struct MonteCarloEstimate {
  double estimate;
  double std_error;
  long long n_samples;
  std::uint64_t seed;
};

/// Sample estimate of cov^2(gamma, g) / (var g - cov^2 + t) with a
/// delta-method standard error. Deterministic for a fixed seed.
MonteCarloEstimate monte_carlo_sndr(const NonlinearMapping& m, const InputDistribution& dist, double t,
                                    long long n_samples, std::uint64_t seed);

/// Coordinate ascent over mappings that are 0 on L, 1 on U and piecewise
/// constant on k equal segments of S. Each k is initialised from the previous
/// (coarser) solution. Returns the SNDR reached for each k.
std::vector<double> piecewise_constant_ascent(const InputDistribution& dist, double t, const LimiterParams& params,
                                              const std::vector<int>& segment_counts, int sweeps = 100);

/// Random mapping with values in [0, 1]: limiter, clipped affine or
/// tabulated over the given interval.
NonlinearMapping random_mapping(std::mt19937_64& rng, Interval span);

/// Deterministic per-trial generator derived from (seed, trial).
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

/// Runs body(i) for i in [0, n) over worker threads; results must be written
/// by index.
void parallel_for(int n, const std::function<void(int)>& body);

void write_reports_csv(std::ostream& out, const std::vector<PerturbationReport>& reports);

}  // namespace sndropt
