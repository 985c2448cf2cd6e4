#include "sndropt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "sndropt/solver.hpp"

namespace sndropt {

const char* to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::case1:
      return "case1";
    case PerturbationKind::case2:
      return "case2";
    case PerturbationKind::lemma3:
      return "lemma3";
    default:
      return "bump";
  }
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GridResult grid_search(const InputDistribution& dist, double t, const GridAxis& eta, const GridAxis& beta) {
  if (eta.n < 1 || beta.n < 1) throw std::invalid_argument("grid_search: axes need at least one point");
  struct RowBest {
    double eta = 0.0, beta = 0.0, sndr = -1.0;
    int evaluated = 0;
  };
  std::vector<RowBest> rows(static_cast<std::size_t>(eta.n));
  parallel_for(eta.n, [&](int i) {
    const double e = eta.at(i);
    auto& row = rows[static_cast<std::size_t>(i)];
    if (e == 0.0) return;
    for (int j = 0; j < beta.n; ++j) {
      const double b = beta.at(j);
      const double s = bussgang(NonlinearMapping::optimal_limiter({e, b}), dist, t).sndr.linear();
      ++row.evaluated;
      if (s > row.sndr) row = {e, b, s, row.evaluated};
    }
  });
  GridResult best{0.0, 0.0, -1.0, 0};
  for (const auto& r : rows) {
    best.evaluated += r.evaluated;
    if (r.evaluated > 0 && r.sndr > best.sndr) {
      best.eta = r.eta;
      best.beta = r.beta;
      best.sndr = r.sndr;
    }
  }
  if (best.evaluated == 0) throw std::invalid_argument("grid_search: every grid point has eta = 0");
  return best;
}

// ---------------------------------------------------------------------------
// Function-space bumps

std::function<double(double)> bumped_limiter(const LimiterParams& p, double center, double half_width,
                                             double amplitude) {
  const auto g = NonlinearMapping::optimal_limiter(p);
  return [g, center, half_width, amplitude](double x) {
    double v = g(x);
    const double u = (x - center) / half_width;
    if (std::abs(u) < 1.0) {
      const double c = std::cos(0.5 * std::numbers::pi * u);
      v += amplitude * c * c;
    }
    return std::clamp(v, 0.0, 1.0);
  };
}

namespace {

double bump_sndr(const InputDistribution& dist, double t, const LimiterParams& p, double center, double half_width,
                 double amplitude) {
  const auto knees = NonlinearMapping::optimal_limiter(p).knees();
  std::vector<double> breaks(knees.begin(), knees.end());
  breaks.push_back(center - half_width);
  breaks.push_back(center);
  breaks.push_back(center + half_width);
  return bussgang(bumped_limiter(p, center, half_width, amplitude), breaks, dist, t).sndr.linear();
}

}  // namespace

std::vector<PerturbationReport> perturb_function_space(const InputDistribution& dist, double t,
                                                       const LimiterParams& params, int n_trials, double bump_scale,
                                                       std::uint64_t seed) {
  if (!(bump_scale >= 0.0 && bump_scale <= 0.05))
    throw std::invalid_argument("perturb_function_space: bump_scale must lie in [0, 0.05]");
  const Interval s = params.affine_region();
  std::vector<PerturbationReport> out(static_cast<std::size_t>(std::max(0, n_trials)));
  parallel_for(n_trials, [&](int i) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double center = s.lo + unit(rng) * s.width();
    const double half_width = (0.05 + 0.45 * unit(rng)) * 0.5 * s.width();
    const double amplitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * bump_scale;
    const double base = bump_sndr(dist, t, params, center, half_width, 0.0);
    const double pert = bump_sndr(dist, t, params, center, half_width, amplitude);
    out[static_cast<std::size_t>(i)] = {PerturbationKind::bump, bump_scale, base, pert, seed};
  });
  return out;
}

ScalingFit stationarity_fit(const InputDistribution& dist, double t, const LimiterParams& params,
                            const std::vector<double>& scales) {
  if (scales.size() < 2) throw std::invalid_argument("stationarity_fit: need at least two scales");
  const Interval s = params.affine_region();
  const double center = 0.5 * (s.lo + s.hi);
  const double half_width = 0.25 * s.width();
  const double base = bump_sndr(dist, t, params, center, half_width, 0.0);

  ScalingFit fit{base, 0.0, 0.0, 0.0, {}};
  std::vector<double> xs, ys;
  for (double sc : scales) {
    const double d = bump_sndr(dist, t, params, center, half_width, sc) - base;
    fit.deltas.push_back(d);
    fit.k = std::max(fit.k, std::abs(d) / (sc * sc));
    if (d == 0.0) return fit;
    xs.push_back(std::log(sc));
    ys.push_back(std::log(std::abs(d)));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Set perturbations

namespace {

using IntervalSet = std::vector<Interval>;

IntervalSet subtract(const IntervalSet& set, Interval cut) {
  IntervalSet out;
  for (const auto& iv : set) {
    if (cut.hi <= iv.lo || cut.lo >= iv.hi) {
      out.push_back(iv);
      continue;
    }
    if (iv.lo < cut.lo) out.push_back({iv.lo, cut.lo});
    if (cut.hi < iv.hi) out.push_back({cut.hi, iv.hi});
  }
  return out;
}

PartialMoments moments(const InputDistribution& dist, const IntervalSet& set) {
  PartialMoments m{};
  for (const auto& iv : set) m += partial_moments(dist, iv);
  return m;
}

// Rails on zero/one, clamp(intercept + slope x) on the affine intervals.
std::vector<AffinePiece> assemble(const IntervalSet& zero, const IntervalSet& affine, const IntervalSet& one,
                                  double slope, double intercept) {
  std::vector<AffinePiece> out;
  for (const auto& iv : zero) out.push_back({iv.lo, iv.hi, 0.0, 0.0});
  for (const auto& iv : one) out.push_back({iv.lo, iv.hi, 1.0, 0.0});
  for (const auto& iv : affine) {
    std::vector<double> cuts{iv.lo, iv.hi};
    for (double rail : {0.0, 1.0}) {
      const double x = (rail - intercept) / slope;
      if (x > iv.lo && x < iv.hi) cuts.push_back(x);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      const double v = intercept + slope * mid;
      if (v <= 0.0)
        out.push_back({cuts[i], cuts[i + 1], 0.0, 0.0});
      else if (v >= 1.0)
        out.push_back({cuts[i], cuts[i + 1], 1.0, 0.0});
      else
        out.push_back({cuts[i], cuts[i + 1], intercept, slope});
    }
  }
  return out;
}

}  // namespace

Interval sliver_room(const InputDistribution& dist, const LimiterParams& params, PerturbationKind kind) {
  const Interval s = params.affine_region();
  if (kind != PerturbationKind::lemma3) return s;
  // The half-line opposite to the zero rail, where g > 0.
  const Interval qs = dist.quadrature_support();
  return params.eta > 0.0 ? Interval{std::max(0.0, s.lo), qs.hi} : Interval{qs.lo, std::min(0.0, s.hi)};
}

PerturbationReport perturb_sets(const InputDistribution& dist, double t, const LimiterParams& params, double width,
                                PerturbationKind kind, double position) {
  if (kind == PerturbationKind::bump) throw std::invalid_argument("perturb_sets: bump is not a set perturbation");
  if (!(width >= 0.0)) throw std::invalid_argument("perturb_sets: sliver width must be >= 0");
  if (!(position >= 0.0 && position <= 1.0)) throw std::invalid_argument("perturb_sets: position must lie in [0, 1]");

  const auto part = rail_partition(params);
  const double base = bussgang(NonlinearMapping::optimal_limiter(params), dist, t).sndr.linear();
  const Interval room = sliver_room(dist, params, kind);
  if (!(room.hi > room.lo) || width > room.width())
    throw std::invalid_argument("perturb_sets: sliver does not fit in the admissible region");
  if (width == 0.0) return {kind, 0.0, base, base, 0};

  const double a = room.lo + position * (room.width() - width);
  const Interval sliver{a, a + width};
  IntervalSet zero = subtract({part.zero_rail}, sliver);
  IntervalSet affine = subtract({part.affine}, sliver);
  IntervalSet one = subtract({part.one_rail}, sliver);
  (kind == PerturbationKind::case2 ? one : zero).push_back(sliver);

  const double railed =
      bussgang(assemble(zero, affine, one, 1.0 / params.eta, params.beta), dist, t).sndr.linear();

  // Best affine segment for the modified regions, clamped back into [0, 1].
  double refit = 0.0;
  double eta = 0.0, beta = 0.0;
  if (!affine.empty() &&
      affine_update({moments(dist, zero), moments(dist, affine), moments(dist, one)}, t, eta, beta) && eta != 0.0) {
    refit = bussgang(assemble(zero, affine, one, 1.0 / eta, beta), dist, t).sndr.linear();
  }
  return {kind, width, base, std::max(railed, refit), 0};
}

std::vector<PerturbationReport> random_set_perturbations(const InputDistribution& dist, double t,
                                                         const LimiterParams& params, PerturbationKind kind, int n,
                                                         double max_fraction, std::uint64_t seed) {
  if (!(max_fraction > 0.0 && max_fraction <= 1.0))
    throw std::invalid_argument("random_set_perturbations: max_fraction must lie in (0, 1]");
  const double max_width = max_fraction * sliver_room(dist, params, kind).width();
  std::vector<PerturbationReport> out(static_cast<std::size_t>(std::max(0, n)));
  parallel_for(n, [&](int i) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double width = max_width * (1e-3 + (1.0 - 1e-3) * unit(rng));
    auto r = perturb_sets(dist, t, params, width, kind, unit(rng));
    r.seed = seed;
    out[static_cast<std::size_t>(i)] = r;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

MonteCarloEstimate monte_carlo_sndr(const NonlinearMapping& m, const InputDistribution& dist, double t,
                                    long long n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("monte_carlo_sndr: need at least two samples");
  if (!(t >= 0.0)) throw std::invalid_argument("monte_carlo_sndr: t must be >= 0");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(n_samples);
  std::vector<double> xs(n), ys(n);
  switch (dist.kind()) {
    case DistKind::uniform_symmetric: {
      std::uniform_real_distribution<double> u(-std::numbers::sqrt3, std::numbers::sqrt3);
      for (auto& x : xs) x = u(rng);
      break;
    }
    case DistKind::standard_gaussian: {
      std::normal_distribution<double> g(0.0, 1.0);
      for (auto& x : xs) x = g(rng);
      break;
    }
    case DistKind::tabulated: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& x : xs) x = dist.quantile(u(rng));
      break;
    }
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = m(xs[i]);
    const double k = static_cast<double>(i + 1);
    mx += (xs[i] - mx) / k;
    my += (ys[i] - my) / k;
  }
  const double nd = static_cast<double>(n);
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    cov += dx * dy;
    var += dy * dy;
  }
  cov /= nd;
  var /= nd;
  const double den = var - cov * cov + t;
  if (cov == 0.0 || !(den > 0.0)) return {0.0, 0.0, n_samples, seed};
  const double est = cov * cov / den;

  // Influence function of f(cov, var) = cov^2 / (var - cov^2 + t).
  const double f_cov = 2.0 * cov * (var + t) / (den * den);
  const double f_var = -cov * cov / (den * den);
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    const double inf = f_cov * (dx * dy - cov) + f_var * (dy * dy - var);
    s2 += inf * inf;
  }
  return {est, std::sqrt(s2 / (nd - 1.0) / nd), n_samples, seed};
}

// ---------------------------------------------------------------------------
// Piecewise-constant ascent

std::vector<double> piecewise_constant_ascent(const InputDistribution& dist, double t, const LimiterParams& params,
                                              const std::vector<int>& segment_counts, int sweeps) {
  const auto part = rail_partition(params);
  const auto u = partial_moments(dist, part.one_rail);
  const Interval s = part.affine;
  const auto g = NonlinearMapping::optimal_limiter(params);

  std::vector<double> results;
  std::vector<double> prev_c;
  int prev_k = 0;
  for (int k : segment_counts) {
    if (k < 1) throw std::invalid_argument("piecewise_constant_ascent: segment count must be >= 1");
    std::vector<double> m0(static_cast<std::size_t>(k)), m1(static_cast<std::size_t>(k)), c(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const double lo = s.lo + s.width() * j / k, hi = s.lo + s.width() * (j + 1) / k;
      const auto pm = partial_moments(dist, {lo, hi});
      m0[static_cast<std::size_t>(j)] = pm.c0;
      m1[static_cast<std::size_t>(j)] = pm.c1;
      const double mid = 0.5 * (lo + hi);
      if (prev_k > 0) {
        const int src = std::min(prev_k - 1, static_cast<int>((mid - s.lo) / s.width() * prev_k));
        c[static_cast<std::size_t>(j)] = prev_c[static_cast<std::size_t>(src)];
      } else {
        c[static_cast<std::size_t>(j)] = g(mid);
      }
    }
    // Running sums E[gamma g], E[g], E[g^2].
    double a = u.c1, e = u.c0, q = u.c0;
    for (int j = 0; j < k; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      a += c[jj] * m1[jj];
      e += c[jj] * m0[jj];
      q += c[jj] * c[jj] * m0[jj];
    }
    auto ratio = [t](double a_, double e_, double q_) {
      const double d = q_ - e_ * e_ - a_ * a_ + t;
      return d > 0.0 ? a_ * a_ / d : 0.0;
    };
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (int j = 0; j < k; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double w0 = m0[jj], w1 = m1[jj];
        const double a0 = a - c[jj] * w1, e0 = e - c[jj] * w0, q0 = q - c[jj] * c[jj] * w0;
        // SNDR(c) = (a0 + w1 c)^2 / (qa c^2 + qb c + qd); its stationary point is linear in c.
        const double qa = w0 - w0 * w0 - w1 * w1;
        const double qb = -2.0 * e0 * w0 - 2.0 * a0 * w1;
        const double qd = q0 - e0 * e0 - a0 * a0 + t;
        double best_c = c[jj];
        double best = ratio(a0 + w1 * best_c, e0 + w0 * best_c, q0 + w0 * best_c * best_c);
        std::vector<double> candidates{0.0, 1.0};
        const double den = w1 * qb - 2.0 * qa * a0;
        if (den != 0.0) candidates.push_back(std::clamp((a0 * qb - 2.0 * w1 * qd) / den, 0.0, 1.0));
        for (double cand : candidates) {
          const double r = ratio(a0 + w1 * cand, e0 + w0 * cand, q0 + w0 * cand * cand);
          if (r > best) {
            best = r;
            best_c = cand;
          }
        }
        c[jj] = best_c;
        a = a0 + w1 * best_c;
        e = e0 + w0 * best_c;
        q = q0 + w0 * best_c * best_c;
      }
    }
    results.push_back(ratio(a, e, q));
    prev_c = c;
    prev_k = k;
  }
  return results;
}

// ---------------------------------------------------------------------------

NonlinearMapping random_mapping(std::mt19937_64& rng, Interval span) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto log_uniform = [&](double lo, double hi) { return std::exp(std::log(lo) + unit(rng) * std::log(hi / lo)); };
  const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
  const int kind = static_cast<int>(unit(rng) * 3.0);
  if (kind == 0) return NonlinearMapping::optimal_limiter({sign * log_uniform(0.1, 10.0), -0.5 + 2.0 * unit(rng)});
  if (kind == 1) {
    const double lo = unit(rng) < 0.5 ? 0.0 : 0.5 * unit(rng);
    const double hi = unit(rng) < 0.5 ? 1.0 : lo + (1.0 - lo) * unit(rng);
    return NonlinearMapping::affine_clipped(sign * log_uniform(0.05, 5.0), -1.0 + 3.0 * unit(rng), lo, hi);
  }
  const int n = 2 + static_cast<int>(unit(rng) * 11.0);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = span.lo + span.width() * unit(rng);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.size() < 2) xs = {span.lo, span.hi};
  std::vector<MappingKnot> knots;
  for (double x : xs) knots.push_back({x, -0.3 + 1.6 * unit(rng)});
  return NonlinearMapping::tabulated(std::move(knots));
}

void write_reports_csv(std::ostream& out, const std::vector<PerturbationReport>& reports) {
  const auto old = out.precision(17);
  out << "kind,magnitude,baseline,perturbed,delta\n";
  for (const auto& r : reports)
    out << to_string(r.kind) << ',' << r.magnitude << ',' << r.baseline_sndr << ',' << r.perturbed_sndr << ','
        << r.delta() << '\n';
  out.precision(old);
}

}  // namespace sndropt
