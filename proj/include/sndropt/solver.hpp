#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sndropt/dist.hpp"
#include "sndropt/mapping.hpp"

namespace sndropt {

enum class Branch { positive, negative };

const char* to_string(Branch b);

struct SolverOptions {
  /// Convergence threshold on max(|d eta|, |d beta|) per damped step.
  double tolerance = 1e-10;
  int max_iterations = 500;
  double damping = 0.5;
  /// Accepted residual of the fixed-point equations at a returned solution.
  double residual_tolerance = 1e-10;
  QuadratureOptions quadrature{};
};

/// A converged real fixed point of the gain/bias equations.
struct FixedPoint {
  LimiterParams params;
  double sndr;
  double residual;
  int iterations;
};

struct SolveOutcome {
  LimiterParams params;
  double sndr_star;
  int iterations;
  double residual;
  Branch branch;
  /// Every distinct fixed point found, best first.
  std::vector<FixedPoint> fixed_points;
};

/// Raised when no start of the multi-start schedule converges.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<FixedPoint> partial = {})
      : std::runtime_error(what), found_(std::move(partial)) {}
  const std::vector<FixedPoint>& fixed_points() const { return found_; }

 private:
  std::vector<FixedPoint> found_;
};

/// Moments over the three regions induced by a limiter.
struct RegionMoments {
  PartialMoments zero_rail;  // L
  PartialMoments affine;     // S
  PartialMoments one_rail;   // U
};

RegionMoments region_moments(const InputDistribution& dist, const LimiterParams& p,
                             const QuadratureOptions& opts = {});

/// Best affine (eta, beta) on S for fixed regions:
///   eta  = (C0U C1S + C1U - C0S C1U) / (C0U C0L + (1 - C0S) t)
///   beta = (C0U C1S + C0U C1U + C1S t) / (C0U C1S + C1U - C0S C1U)
/// Returns false when either denominator vanishes.
bool affine_update(const RegionMoments& m, double t, double& eta, double& beta);

/// One application of the gain/bias equations with regions recomputed from p.
/// Throws std::domain_error when the regions are degenerate.
LimiterParams fixed_point_map(const InputDistribution& dist, double t, const LimiterParams& p,
                              const QuadratureOptions& opts = {});

/// max(|eta' - eta|, |beta' - beta|) for the map above.
double fixed_point_residual(const InputDistribution& dist, double t, const LimiterParams& p,
                            const QuadratureOptions& opts = {});

/// Damped multi-start fixed-point iteration on the general equations; the
/// fixed point with the largest SNDR is returned. Requires t > 0.
SolveOutcome solve_general(const InputDistribution& dist, double t, Branch branch, const SolverOptions& opts = {});

/// Even densities: beta = 1/2 and eta solves
///   eta = 2 C1(U) / (C0(U) + 2t),  U = [eta/2, inf)
/// (mirrored for the negative branch), by safeguarded Newton-bisection.
SolveOutcome solve_symmetric(const InputDistribution& dist, double t, Branch branch, const SolverOptions& opts = {});

/// Closed-form optimal eta for the uniform input:
///   8 sqrt3 t + 2 sqrt3 - 4 sqrt(12 t^2 + 6 t), negated for the negative branch.
double uniform_eta_closed_form(double t, Branch branch);

/// eta (1/2 - erf(eta / (2 sqrt2)) / 2 + 2t) - 2 phi(eta / 2) for eta > 0,
/// and the mirrored expression for eta < 0.
double gaussian_eta_residual(double eta, double t);

/// Root of gaussian_eta_residual on (0, 12] (negated for the negative branch).
double gaussian_eta_solve(double t, Branch branch);

/// 1 / (1/R - 1) with R = C2(S) + eta C1(U) + eta beta C1(S). Only meaningful
/// at a fixed point. Throws std::domain_error if R is outside (0, 1].
Sndr optimal_sndr(const LimiterParams& params, const InputDistribution& dist, double t,
                  const QuadratureOptions& opts = {});

/// R(eta, beta) as above.
double optimality_ratio(const LimiterParams& params, const InputDistribution& dist,
                        const QuadratureOptions& opts = {});

}  // namespace sndropt
