#include "sndropt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "roots.hpp"

namespace sndropt {

const char* to_string(Branch b) { return b == Branch::positive ? "positive" : "negative"; }

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

void require_positive_noise(double t, const char* who) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument(std::string(who) + ": noise ratio t must be > 0 (t = 0 has no clipping optimum)");
}

double sign_of(Branch b) { return b == Branch::positive ? 1.0 : -1.0; }

std::optional<LimiterParams> try_map(const InputDistribution& dist, double t, const LimiterParams& p,
                                     const QuadratureOptions& q) {
  double eta = 0.0, beta = 0.0;
  if (!affine_update(region_moments(dist, p, q), t, eta, beta)) return std::nullopt;
  if (!std::isfinite(eta) || !std::isfinite(beta) || eta == 0.0) return std::nullopt;
  return LimiterParams(eta, beta);
}

double step_size(const LimiterParams& a, const LimiterParams& b) {
  return std::max(std::abs(a.eta - b.eta), std::abs(a.beta - b.beta));
}

double limiter_sndr(const LimiterParams& p, const InputDistribution& dist, double t, const QuadratureOptions& q) {
  return bussgang(NonlinearMapping::optimal_limiter(p), dist, t, q).sndr.linear();
}

// Newton refinement of F(x) - x = 0 with a finite-difference Jacobian.
LimiterParams polish(const InputDistribution& dist, double t, LimiterParams x, double sign, const QuadratureOptions& q) {
  auto residual_vec = [&](const LimiterParams& p, double& r_eta, double& r_beta) {
    const auto f = try_map(dist, t, p, q);
    if (!f) return false;
    r_eta = f->eta - p.eta;
    r_beta = f->beta - p.beta;
    return true;
  };
  double g0 = 0.0, g1 = 0.0;
  if (!residual_vec(x, g0, g1)) return x;
  for (int it = 0; it < 8; ++it) {
    const double norm = std::max(std::abs(g0), std::abs(g1));
    if (norm < 1e-15) break;
    const double he = 1e-7 * std::max(1.0, std::abs(x.eta));
    const double hb = 1e-7 * std::max(1.0, std::abs(x.beta));
    double a0, a1, b0, b1;
    if (!residual_vec({x.eta + he, x.beta}, a0, a1) || !residual_vec({x.eta, x.beta + hb}, b0, b1)) break;
    const double j00 = (a0 - g0) / he, j10 = (a1 - g1) / he;
    const double j01 = (b0 - g0) / hb, j11 = (b1 - g1) / hb;
    const double det = j00 * j11 - j01 * j10;
    if (!std::isfinite(det) || det == 0.0) break;
    const double de = (-g0 * j11 + g1 * j01) / det;
    const double db = (-g1 * j00 + g0 * j10) / det;
    const double eta = x.eta + de;
    if (eta * sign <= 0.0) break;
    const LimiterParams cand(eta, x.beta + db);
    double c0, c1;
    if (!residual_vec(cand, c0, c1) || std::max(std::abs(c0), std::abs(c1)) >= norm) break;
    x = cand;
    g0 = c0;
    g1 = c1;
  }
  return x;
}

struct StartResult {
  std::optional<LimiterParams> params;
  int iterations = 0;
};

StartResult iterate_from(const InputDistribution& dist, double t, LimiterParams x, double sign,
                         const SolverOptions& opts) {
  const auto& q = opts.quadrature;
  auto fx = try_map(dist, t, x, q);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (!fx || fx->eta * sign <= 0.0) return {std::nullopt, it};
    // Damped step, shortened while the target lands on a degenerate partition
    // or crosses into the other branch.
    double lambda = opts.damping;
    std::optional<LimiterParams> next, f_next;
    for (int tries = 0; tries < 30; ++tries, lambda *= 0.5) {
      const double eta = x.eta + lambda * (fx->eta - x.eta);
      const double beta = x.beta + lambda * (fx->beta - x.beta);
      if (eta * sign <= 0.0) continue;
      const LimiterParams cand(eta, beta);
      auto f_cand = try_map(dist, t, cand, q);
      if (!f_cand || f_cand->eta * sign <= 0.0) continue;
      next = cand;
      f_next = f_cand;
      break;
    }
    if (!next) return {std::nullopt, it};
    const double step = step_size(x, *next);
    x = *next;
    fx = f_next;
    if (step < opts.tolerance) return {polish(dist, t, x, sign, q), it};
  }
  return {std::nullopt, opts.max_iterations};
}

}  // namespace

RegionMoments region_moments(const InputDistribution& dist, const LimiterParams& p, const QuadratureOptions& opts) {
  const auto r = rail_partition(p);
  return {partial_moments(dist, r.zero_rail, opts), partial_moments(dist, r.affine, opts),
          partial_moments(dist, r.one_rail, opts)};
}

bool affine_update(const RegionMoments& m, double t, double& eta, double& beta) {
  const auto& L = m.zero_rail;
  const auto& S = m.affine;
  const auto& U = m.one_rail;
  const double num = U.c0 * S.c1 + U.c1 - S.c0 * U.c1;
  const double den = U.c0 * L.c0 + (1.0 - S.c0) * t;
  if (!(den > 0.0) || num == 0.0 || !std::isfinite(num)) return false;
  eta = num / den;
  beta = (U.c0 * S.c1 + U.c0 * U.c1 + S.c1 * t) / num;
  return std::isfinite(eta) && std::isfinite(beta);
}

LimiterParams fixed_point_map(const InputDistribution& dist, double t, const LimiterParams& p,
                              const QuadratureOptions& opts) {
  auto f = try_map(dist, t, p, opts);
  if (!f) throw std::domain_error("fixed_point_map: degenerate rail partition");
  return *f;
}

double fixed_point_residual(const InputDistribution& dist, double t, const LimiterParams& p,
                            const QuadratureOptions& opts) {
  return step_size(fixed_point_map(dist, t, p, opts), p);
}

SolveOutcome solve_general(const InputDistribution& dist, double t, Branch branch, const SolverOptions& opts) {
  require_positive_noise(t, "solve_general");
  const double sign = sign_of(branch);
  const auto& q = opts.quadrature;

  // Data-driven start from the symmetric equation evaluated with U = [0, inf).
  const auto half = partial_moments(dist, branch == Branch::positive ? Interval{0.0, kInf} : Interval{-kInf, 0.0}, q);
  const double data_eta = 2.0 * std::abs(half.c1) / (0.5 + 2.0 * t);

  std::vector<FixedPoint> found;
  int attempts = 0;
  for (double eta0 : {0.5, 1.0, 2.0, 4.0, data_eta}) {
    for (double beta0 : {0.25, 0.5, 0.75}) {
      ++attempts;
      if (!(eta0 > 0.0)) continue;
      const auto r = iterate_from(dist, t, LimiterParams(sign * eta0, beta0), sign, opts);
      if (!r.params) continue;
      const auto f = try_map(dist, t, *r.params, q);
      if (!f) continue;
      const double res = step_size(*f, *r.params);
      if (!(res <= opts.residual_tolerance)) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const FixedPoint& fp) {
        return step_size(fp.params, *r.params) < 1e-7;
      });
      if (dup) continue;
      found.push_back({*r.params, limiter_sndr(*r.params, dist, t, q), res, r.iterations});
    }
  }
  if (found.empty()) {
    std::ostringstream msg;
    msg << "solve_general: no fixed point converged from " << attempts << " starts (t=" << t
        << ", branch=" << to_string(branch) << ")";
    throw SolverError(msg.str());
  }
  std::stable_sort(found.begin(), found.end(), [](const FixedPoint& a, const FixedPoint& b) { return a.sndr > b.sndr; });
  const auto& best = found.front();
  return {best.params, best.sndr, best.iterations, best.residual, branch, found};
}

SolveOutcome solve_symmetric(const InputDistribution& dist, double t, Branch branch, const SolverOptions& opts) {
  require_positive_noise(t, "solve_symmetric");
  if (!is_symmetric(dist)) throw std::invalid_argument("solve_symmetric: input density is not even");
  const auto& q = opts.quadrature;
  const double hi = 2.0 * dist.quadrature_support().hi;

  // h(eta) = eta (C0(U) + 2t) - 2 C1(U) with U the rail-1 region at beta = 1/2.
  auto h = [&](double eta) {
    const Interval u = eta > 0.0 ? Interval{0.5 * eta, kInf} : Interval{-kInf, 0.5 * eta};
    const auto m = partial_moments(dist, u, q);
    return eta * (m.c0 + 2.0 * t) - 2.0 * m.c1;
  };
  const double near0 = branch == Branch::positive ? 1e-12 * hi : -1e-12 * hi;
  const double far = branch == Branch::positive ? hi : -hi;
  const double f_near = h(near0), f_far = h(far);
  if (!(f_near * f_far < 0.0)) {
    std::ostringstream msg;
    msg << "solve_symmetric: root not bracketed on [" << near0 << ", " << far << "], residuals " << f_near << ", "
        << f_far;
    throw SolverError(msg.str());
  }
  const auto root = detail::safeguarded_root(h, near0, far, f_near, f_far);
  const LimiterParams p(root.x, 0.5);
  const double res = fixed_point_residual(dist, t, p, q);
  FixedPoint fp{p, limiter_sndr(p, dist, t, q), res, root.iterations};
  return {p, fp.sndr, root.iterations, res, branch, {fp}};
}

double uniform_eta_closed_form(double t, Branch branch) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("uniform_eta_closed_form: t must be >= 0");
  const double eta = 8.0 * kSqrt3 * t + 2.0 * kSqrt3 - 4.0 * std::sqrt(12.0 * t * t + 6.0 * t);
  return sign_of(branch) * eta;
}

double gaussian_eta_residual(double eta, double t) {
  const double a = std::abs(eta);
  const double tail = 0.5 * std::erfc(a / (2.0 * std::numbers::sqrt2));
  const double rhs = 2.0 / std::sqrt(2.0 * std::numbers::pi) * std::exp(-eta * eta / 8.0);
  return eta * (tail + 2.0 * t) - (eta > 0.0 ? rhs : -rhs);
}

double gaussian_eta_solve(double t, Branch branch) {
  require_positive_noise(t, "gaussian_eta_solve");
  auto f = [t](double eta) { return gaussian_eta_residual(eta, t); };
  const double lo = 1e-300, hi = 12.0;
  const double flo = f(lo), fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0)) {
    std::ostringstream msg;
    msg << "gaussian_eta_solve: root not bracketed on (0, 12]; residuals " << flo << ", " << fhi;
    throw SolverError(msg.str());
  }
  return sign_of(branch) * detail::safeguarded_root(f, lo, hi, flo, fhi).x;
}

double optimality_ratio(const LimiterParams& params, const InputDistribution& dist, const QuadratureOptions& opts) {
  const auto m = region_moments(dist, params, opts);
  return m.affine.c2 + params.eta * m.one_rail.c1 + params.eta * params.beta * m.affine.c1;
}

Sndr optimal_sndr(const LimiterParams& params, const InputDistribution& dist, double t, const QuadratureOptions& opts) {
  if (!(t >= 0.0)) throw std::invalid_argument("optimal_sndr: t must be >= 0");
  const double r = optimality_ratio(params, dist, opts);
  if (!(r > 1e-12)) throw std::domain_error("optimal_sndr: R <= 0, parameters are not a fixed point");
  if (std::abs(1.0 - r) <= 1e-12) return Sndr::infinite();
  if (r > 1.0) throw std::domain_error("optimal_sndr: R > 1, parameters are not a fixed point");
  return Sndr::finite(r / (1.0 - r));
}

}  // namespace sndropt
