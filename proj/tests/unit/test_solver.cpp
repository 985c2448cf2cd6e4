#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "sndropt/solver.hpp"

using namespace sndropt;
using Catch::Approx;

namespace {

constexpr double kSqrt3 = std::numbers::sqrt3;

double quadratic_residual(double eta, double t) {
  return eta * eta - (16.0 * kSqrt3 * t + 4.0 * kSqrt3) * eta + 12.0;
}

}  // namespace

TEST_CASE("uniform closed form") {
  CHECK(uniform_eta_closed_form(0.0, Branch::positive) == Approx(2.0 * kSqrt3).epsilon(1e-15));
  CHECK(uniform_eta_closed_form(0.0, Branch::negative) == Approx(-2.0 * kSqrt3).epsilon(1e-15));
  for (double t : {0.0, 1e-6, 1e-3, 0.05, 0.1, 1.0, 10.0}) {
    const double eta = uniform_eta_closed_form(t, Branch::positive);
    CHECK(std::abs(quadratic_residual(eta, t)) < 1e-10 * std::max(1.0, eta * eta));
    // the discarded root of the quadratic puts the knee outside the support
    const double other = 12.0 / eta;
    CHECK(0.5 * other >= kSqrt3 - 1e-12);
    CHECK(0.5 * eta <= kSqrt3 + 1e-12);
  }
  CHECK(uniform_eta_closed_form(0.1, Branch::positive) ==
        Approx(8.0 * kSqrt3 * 0.1 + 2.0 * kSqrt3 - 4.0 * std::sqrt(0.12 + 0.6)).epsilon(1e-15));
  CHECK_THROWS_AS(uniform_eta_closed_form(-1.0, Branch::positive), std::invalid_argument);
}

TEST_CASE("general solver reproduces the uniform closed form") {
  const auto u = InputDistribution::uniform_symmetric();
  const auto r = solve_general(u, 0.01, Branch::positive);
  CHECK(std::abs(r.params.eta - uniform_eta_closed_form(0.01, Branch::positive)) < 1e-8);
  CHECK(std::abs(r.params.beta - 0.5) < 1e-8);
  CHECK(r.residual < 1e-10);
  CHECK(r.branch == Branch::positive);
}

TEST_CASE("symmetric inputs are biased at the midpoint") {
  const std::vector<InputDistribution> dists{InputDistribution::uniform_symmetric(),
                                             InputDistribution::standard_gaussian(),
                                             load_fixture("triangular_pdf.csv").dist};
  for (const auto& d : dists) {
    for (double t : {1.0, 0.1, 0.01, 1e-3, 1e-4}) {
      const auto r = solve_general(d, t, Branch::positive);
      CHECK(std::abs(r.params.beta - 0.5) < 1e-8);
      const auto m = region_moments(d, r.params);
      CHECK(std::abs(m.affine.c1) < 1e-8);
      CHECK(std::abs(m.one_rail.c0 - m.zero_rail.c0) < 1e-8);
    }
  }
}

TEST_CASE("symmetric solver") {
  const auto u = InputDistribution::uniform_symmetric();
  CHECK(std::abs(solve_symmetric(u, 1e-12, Branch::positive).params.eta - 2.0 * kSqrt3) < 1e-4);
  CHECK(std::abs(solve_symmetric(u, 0.1, Branch::positive).params.eta - uniform_eta_closed_form(0.1, Branch::positive)) <
        1e-10);
  const auto neg = solve_symmetric(u, 0.1, Branch::negative);
  CHECK(std::abs(neg.params.eta - uniform_eta_closed_form(0.1, Branch::negative)) < 1e-10);
  CHECK(neg.params.beta == 0.5);
  CHECK_THROWS_AS(solve_symmetric(load_fixture("skewed_pdf.csv").dist, 0.1, Branch::positive), std::invalid_argument);
}

TEST_CASE("gaussian transcendental equation") {
  const auto g = InputDistribution::standard_gaussian();
  for (double t : {0.001, 0.01, 0.1}) {
    const double eta = gaussian_eta_solve(t, Branch::positive);
    CHECK(std::abs(gaussian_eta_residual(eta, t)) < 1e-10);
    CHECK(std::abs(solve_symmetric(g, t, Branch::positive).params.eta - eta) < 1e-8);
    CHECK(gaussian_eta_solve(t, Branch::negative) == -eta);
  }
  CHECK(gaussian_eta_solve(0.001, Branch::positive) > gaussian_eta_solve(0.1, Branch::positive));
  CHECK_THROWS_AS(gaussian_eta_solve(1e-13, Branch::positive), SolverError);
  CHECK_THROWS_AS(gaussian_eta_solve(0.0, Branch::positive), std::invalid_argument);
}

TEST_CASE("optimal SNDR formula") {
  const auto u = InputDistribution::uniform_symmetric();
  const LimiterParams p{uniform_eta_closed_form(0.1, Branch::positive), 0.5};
  const double formula = optimal_sndr(p, u, 0.1).linear();
  const double direct = bussgang(NonlinearMapping::optimal_limiter(p), u, 0.1).sndr.linear();
  CHECK(std::abs(formula - direct) < 1e-8);

  SECTION("R = 1 is the infinite marker") {
    CHECK(optimal_sndr({2.0 * kSqrt3, 0.5}, u, 0.0).is_infinite());
  }
  SECTION("degenerate parameters give R <= 0") {
    // the affine region lies beyond the support, so g is constant
    const auto g = InputDistribution::standard_gaussian();
    CHECK(std::abs(optimality_ratio({1.0, 20.0}, g)) < 1e-12);
    CHECK_THROWS_AS(optimal_sndr({1.0, 20.0}, g, 0.1), std::domain_error);
    CHECK(std::abs(optimality_ratio({1.0, 3.0}, u)) < 1e-12);
    CHECK_THROWS_AS(optimal_sndr({1.0, 3.0}, u, 0.1), std::domain_error);
  }
}

TEST_CASE("solve outcome invariants") {
  const std::vector<InputDistribution> dists{InputDistribution::uniform_symmetric(),
                                             InputDistribution::standard_gaussian(),
                                             load_fixture("skewed_pdf.csv").dist};
  for (const auto& d : dists) {
    for (double db : {0.0, 10.0, 20.0, 30.0, 40.0}) {
      const double t = noise_ratio_from_dsnr_db(db);
      for (Branch b : {Branch::positive, Branch::negative}) {
        const auto r = solve_general(d, t, b);
        INFO("db=" << db << " branch=" << to_string(b));
        CHECK(fixed_point_residual(d, t, r.params) < 1e-9);
        CHECK((b == Branch::positive ? r.params.eta > 0.0 : r.params.eta < 0.0));
        const Interval s = r.params.affine_region();
        CHECK(s.lo < s.hi);
        const auto g = NonlinearMapping::optimal_limiter(r.params);
        CHECK(g(0.5 * (s.lo + s.hi)) > 0.0);
        CHECK(g(0.5 * (s.lo + s.hi)) < 1.0);
        const double formula = optimal_sndr(r.params, d, t).linear();
        CHECK(std::abs(formula - r.sndr_star) <= 1e-8 * std::max(1.0, r.sndr_star * r.sndr_star));
        CHECK(r.sndr_star <= 1.0 / (4.0 * t) + 1e-9);
        REQUIRE_FALSE(r.fixed_points.empty());
        for (const auto& fp : r.fixed_points) CHECK(fp.sndr <= r.sndr_star);
      }
    }
  }
}

TEST_CASE("branches mirror for even inputs") {
  for (const auto& d : {InputDistribution::uniform_symmetric(), InputDistribution::standard_gaussian()}) {
    for (double t : {0.3, 0.01, 1e-4}) {
      const auto pos = solve_general(d, t, Branch::positive);
      const auto neg = solve_general(d, t, Branch::negative);
      CHECK(std::abs(pos.params.eta + neg.params.eta) < 1e-9);
      CHECK(std::abs(pos.sndr_star - neg.sndr_star) < 1e-9 * std::max(1.0, pos.sndr_star));
    }
  }
}

TEST_CASE("skewed input has a shifted bias") {
  const auto d = load_fixture("skewed_pdf.csv").dist;
  const auto r = solve_general(d, 0.01, Branch::positive);
  CHECK(std::abs(r.params.beta - 0.5) > 0.05);
  const auto mirrored = solve_general(d, 0.01, Branch::negative);
  CHECK(std::abs(mirrored.params.beta - 0.5) > 0.05);
}

TEST_CASE("solver errors") {
  const auto u = InputDistribution::uniform_symmetric();
  CHECK_THROWS_AS(solve_general(u, 0.0, Branch::positive), std::invalid_argument);
  CHECK_THROWS_AS(solve_symmetric(u, 0.0, Branch::positive), std::invalid_argument);
  SolverOptions tight;
  tight.max_iterations = 1;
  CHECK_THROWS_AS(solve_general(u, 0.1, Branch::positive, tight), SolverError);
  CHECK_THROWS_AS(fixed_point_map(u, 0.1, {100.0, 5.0}), std::domain_error);
}
