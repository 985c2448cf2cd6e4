#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "sndropt/mapping.hpp"
#include "sndropt/oracle.hpp"

using namespace sndropt;
using Catch::Approx;

TEST_CASE("limiter evaluation") {
  const auto g = NonlinearMapping::optimal_limiter({2.0, 0.5});
  CHECK(g(0.0) == 0.5);
  CHECK(g(-10.0) == 0.0);
  CHECK(g(10.0) == 1.0);
  CHECK(eval_mapping(g, 0.5) == 0.75);
  // continuity at both knees
  const LimiterParams p{2.0, 0.5};
  for (double k : {p.lower_knee(), p.upper_knee()}) CHECK(g(k - 1e-12) == Approx(g(k + 1e-12)).margin(1e-11));
}

TEST_CASE("negative eta mirrors the limiter") {
  const LimiterParams p{-2.0, 0.5};
  const auto g = NonlinearMapping::optimal_limiter(p);
  CHECK(g(-10.0) == 1.0);
  CHECK(g(10.0) == 0.0);
  CHECK(g(0.0) == 0.5);
  const auto part = rail_partition(p);
  CHECK(part.zero_rail.lo == Approx(1.0));
  CHECK(part.one_rail.hi == Approx(-1.0));
  CHECK(p.affine_region().lo < p.affine_region().hi);
}

TEST_CASE("limiter rejects eta = 0") { CHECK_THROWS_AS(LimiterParams(0.0, 0.5), std::invalid_argument); }

TEST_CASE("reference mapping g2") {
  const auto g2 = NonlinearMapping::reference_g2();
  CHECK(g2(0.0) == Approx(0.4));
  CHECK(g2(-0.4) == Approx(0.0).margin(1e-15));
  CHECK(g2(0.6) == Approx(1.0));
  CHECK(g2(-1.0) == 0.0);
  CHECK(g2(2.0) == 1.0);
  const auto knees = g2.knees();
  REQUIRE(knees.size() == 2);
  CHECK(knees[0] == Approx(-0.4));
  CHECK(knees[1] == Approx(0.6));
}

TEST_CASE("tabulated mapping is clamped with exact rail crossings") {
  const auto m = NonlinearMapping::tabulated({{-1.0, -0.5}, {0.0, 0.5}, {1.0, 1.5}});
  CHECK(m(-2.0) == 0.0);
  CHECK(m(-0.5) == Approx(0.0).margin(1e-15));
  CHECK(m(-0.25) == Approx(0.25));
  CHECK(m(0.25) == Approx(0.75));
  CHECK(m(0.75) == 1.0);
  CHECK_THROWS_AS(NonlinearMapping::tabulated({{0.0, 0.1}, {0.0, 0.2}}), std::invalid_argument);
}

TEST_CASE("random mappings stay inside [0, 1]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-6.0, 6.0);
  for (int i = 0; i < 500; ++i) {
    const auto m = random_mapping(rng, {-2.0, 2.0});
    for (int j = 0; j < 50; ++j) {
      const double v = m(x(rng));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("full-range affine on the uniform input gives 0 dB at t = 1/12") {
  const auto u = InputDistribution::uniform_symmetric();
  const auto g = NonlinearMapping::affine_clipped(1.0 / (2.0 * std::numbers::sqrt3), 0.5);
  const auto r = bussgang(g, u, 1.0 / 12.0);
  CHECK(r.alpha == Approx(1.0 / (2.0 * std::numbers::sqrt3)).epsilon(1e-14));
  CHECK(std::abs(r.sndr.linear() - 1.0) < 1e-12);
  CHECK(std::abs(sndr_db(r)) < 1e-11);
}

TEST_CASE("distortionless noiseless case is tagged infinite") {
  const auto u = InputDistribution::uniform_symmetric();
  const auto g = NonlinearMapping::affine_clipped(1.0 / (2.0 * std::numbers::sqrt3), 0.5);
  const auto r = bussgang(g, u, 0.0);
  CHECK(r.sndr.is_infinite());
  CHECK(std::isinf(sndr_db(r)));
  CHECK(sndr_db(r) > 0.0);
}

TEST_CASE("constant mapping has zero SNDR") {
  const auto c = NonlinearMapping::affine_clipped(0.0, 0.7);
  for (const auto& d : {InputDistribution::uniform_symmetric(), InputDistribution::standard_gaussian()}) {
    for (double t : {0.0, 0.01, 1.0}) {
      const auto r = bussgang(c, d, t);
      CHECK(r.sndr.linear() == 0.0);
      CHECK_FALSE(r.sndr.is_infinite());
    }
  }
  CHECK(std::isinf(sndr_db(Sndr::finite(0.0))));
  CHECK(sndr_db(Sndr::finite(0.0)) < 0.0);
}

TEST_CASE("dB conversion") {
  CHECK(sndr_db(Sndr::finite(1.0)) == 0.0);
  CHECK(sndr_db(Sndr::finite(100.0)) == Approx(20.0).epsilon(1e-15));
  CHECK(db_to_linear(20.0) == Approx(100.0).epsilon(1e-14));
  CHECK(noise_ratio_from_dsnr_db(10.0) == Approx(0.1).epsilon(1e-15));
  for (double v : {1e-3, 0.37, 5.0, 1234.5}) CHECK(db_to_linear(sndr_db(Sndr::finite(v))) == Approx(v).epsilon(1e-12));
}

TEST_CASE("distortion power is non-negative and excludes DC") {
  std::mt19937_64 rng(5);
  const auto g = InputDistribution::standard_gaussian();
  for (int i = 0; i < 200; ++i) {
    const auto m = random_mapping(rng, {-3.0, 3.0});
    const auto r = bussgang(m, g, 0.01);
    CHECK(r.distortion_power >= 0.0);
    CHECK(r.distortion_power <= r.second_moment - r.mean_out * r.mean_out + 1e-12);
  }
}

TEST_CASE("physical and normalized SNDR agree") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<InputDistribution> dists{InputDistribution::uniform_symmetric(),
                                             InputDistribution::standard_gaussian()};
  for (int i = 0; i < 100; ++i) {
    const auto& d = dists[static_cast<std::size_t>(i % 2)];
    const auto m = random_mapping(rng, {-2.0, 2.0});
    const double a = 0.1 + 10.0 * unit(rng);
    const double sx = 0.1 + 5.0 * unit(rng);
    const double sv2 = a * a * (0.001 + unit(rng));
    const double normalized = bussgang(m, d, sv2 / (a * a)).sndr.linear();
    const double physical = sndr_physical(m, d, a, sx, sv2);
    CHECK(std::abs(physical - normalized) <= 1e-9 * std::max(1.0, normalized));
  }
}

TEST_CASE("distortion is uncorrelated with the input") {
  std::mt19937_64 rng(19);
  for (const auto& d : {InputDistribution::uniform_symmetric(), InputDistribution::standard_gaussian()}) {
    for (int i = 0; i < 50; ++i) {
      const auto m = random_mapping(rng, {-2.0, 2.0});
      const auto r = bussgang(m, d, 0.1);
      const auto knees = m.knees();
      const double corr = expectation(
          d, [&](double x) { return x * (m(x) - r.alpha * x); }, Interval::whole(), knees);
      CHECK(std::abs(corr) < 1e-9);
    }
  }
}

TEST_CASE("SNDR decreases with noise") {
  std::mt19937_64 rng(23);
  const auto g = InputDistribution::standard_gaussian();
  for (int i = 0; i < 100; ++i) {
    const auto m = random_mapping(rng, {-3.0, 3.0});
    double prev = kInf;
    for (double t : {1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
      const double s = bussgang(m, g, t).sndr.linear();
      CHECK(s <= prev);
      prev = s;
    }
  }
}

TEST_CASE("SNDR never exceeds 1/(4t)") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<InputDistribution> dists{InputDistribution::uniform_symmetric(),
                                             InputDistribution::standard_gaussian(),
                                             load_fixture("skewed_pdf.csv").dist};
  for (int i = 0; i < 1500; ++i) {
    const auto& d = dists[static_cast<std::size_t>(i % 3)];
    const auto m = random_mapping(rng, {-3.0, 3.0});
    const double t = std::pow(10.0, -5.0 * unit(rng));
    CHECK(bussgang(m, d, t).sndr.linear() <= 1.0 / (4.0 * t) + 1e-9);
  }
}

TEST_CASE("generic quadrature agrees with piecewise moments") {
  std::mt19937_64 rng(31);
  const auto g = InputDistribution::standard_gaussian();
  for (int i = 0; i < 30; ++i) {
    const auto m = random_mapping(rng, {-3.0, 3.0});
    const auto knees = m.knees();
    const auto a = bussgang(m, g, 0.05);
    const auto b = bussgang([&](double x) { return m(x); }, knees, g, 0.05);
    CHECK(a.sndr.linear() == Approx(b.sndr.linear()).margin(1e-9));
  }
}

TEST_CASE("bussgang rejects negative noise") {
  CHECK_THROWS_AS(bussgang(NonlinearMapping::reference_g2(), InputDistribution::uniform_symmetric(), -1.0),
                  std::invalid_argument);
}
