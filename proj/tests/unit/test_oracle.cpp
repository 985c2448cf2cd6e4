#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "sndropt/oracle.hpp"
#include "sndropt/solver.hpp"

using namespace sndropt;
using Catch::Approx;

TEST_CASE("grid search finds the uniform optimum") {
  const auto u = InputDistribution::uniform_symmetric();
  const double t = 0.1;
  const double eta = uniform_eta_closed_form(t, Branch::positive);
  const GridAxis ea{0.1, 6.0, 128}, ba{0.0, 1.0, 128};
  const auto g = grid_search(u, t, ea, ba);
  CHECK(std::abs(g.eta - eta) <= ea.cell());
  CHECK(std::abs(g.beta - 0.5) <= ba.cell());
  CHECK(g.evaluated == 128 * 128);
  CHECK(g.sndr <= solve_symmetric(u, t, Branch::positive).sndr_star + 1e-9);
}

TEST_CASE("beta slice peaks at the midpoint") {
  const auto u = InputDistribution::uniform_symmetric();
  const double eta = uniform_eta_closed_form(0.1, Branch::positive);
  const auto g = grid_search(u, 0.1, {eta, eta, 1}, {0.0, 1.0, 129});
  CHECK(g.beta == 0.5);
}

TEST_CASE("grid search on the gaussian agrees with the solver") {
  const auto d = InputDistribution::standard_gaussian();
  const double t = 0.01;
  const auto r = solve_general(d, t, Branch::positive);
  const GridAxis ea{0.1, 6.0, 128}, ba{0.0, 1.0, 128};
  const auto g = grid_search(d, t, ea, ba);
  CHECK(std::abs(g.eta - r.params.eta) <= ea.cell());
  CHECK(std::abs(g.beta - r.params.beta) <= ba.cell());
  CHECK(g.sndr <= r.sndr_star + 1e-9);
}

TEST_CASE("single-point grid") {
  const auto g = grid_search(InputDistribution::uniform_symmetric(), 0.1, {2.0, 2.0, 1}, {0.3, 0.3, 1});
  CHECK(g.eta == 2.0);
  CHECK(g.beta == 0.3);
  CHECK(g.evaluated == 1);
}

TEST_CASE("function-space bumps") {
  const auto u = InputDistribution::uniform_symmetric();
  const auto r = solve_general(u, 0.1, Branch::positive);
  SECTION("zero bump changes nothing") {
    for (const auto& rep : perturb_function_space(u, 0.1, r.params, 20, 0.0, 1)) CHECK(rep.delta() == 0.0);
  }
  SECTION("bumps never beat the optimum") {
    for (const auto& rep : perturb_function_space(u, 0.1, r.params, 100, 0.05, 2)) CHECK(rep.delta() <= 1e-9);
  }
  SECTION("scale above 0.05 is rejected") {
    CHECK_THROWS_AS(perturb_function_space(u, 0.1, r.params, 1, 0.06, 1), std::invalid_argument);
  }
  SECTION("loss is quadratic in the bump scale") {
    const auto fit = stationarity_fit(u, 0.1, r.params, {0.04, 0.02, 0.01, 0.005, 0.0025});
    CHECK(fit.r_squared > 0.95);
    CHECK(fit.slope == Approx(2.0).margin(0.1));
    CHECK(std::abs(fit.deltas[1] / fit.deltas[2]) == Approx(4.0).margin(0.2));
  }
  SECTION("bumps on the rails are clamped") {
    const double knee = r.params.upper_knee();
    const auto g = bumped_limiter(r.params, knee + 0.5, 0.3, 0.05);
    for (double x = knee; x < knee + 1.0; x += 0.01) CHECK(g(x) == 1.0);
    const auto h = bumped_limiter(r.params, r.params.lower_knee() - 0.5, 0.3, -0.05);
    for (double x = r.params.lower_knee() - 1.0; x < r.params.lower_knee(); x += 0.01) CHECK(h(x) == 0.0);
  }
}

TEST_CASE("set perturbations") {
  const auto u = InputDistribution::uniform_symmetric();
  const double t = 0.1;
  const auto r = solve_general(u, t, Branch::positive);
  CHECK(perturb_sets(u, t, r.params, 0.1, PerturbationKind::case1, 0.0).delta() < 0.0);
  CHECK(perturb_sets(u, t, r.params, 0.1, PerturbationKind::case2, 1.0).delta() < 0.0);
  for (auto k : {PerturbationKind::case1, PerturbationKind::case2, PerturbationKind::lemma3}) {
    CHECK(perturb_sets(u, t, r.params, 0.0, k, 0.5).delta() == 0.0);
    CHECK_THROWS_AS(perturb_sets(u, t, r.params, 100.0, k, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(perturb_sets(u, t, r.params, -0.1, k, 0.5), std::invalid_argument);
  }
  CHECK_THROWS_AS(perturb_sets(u, t, r.params, 0.1, PerturbationKind::bump, 0.5), std::invalid_argument);
}

TEST_CASE("random slivers never help") {
  const std::vector<InputDistribution> dists{InputDistribution::uniform_symmetric(),
                                             InputDistribution::standard_gaussian(),
                                             load_fixture("skewed_pdf.csv").dist};
  for (const auto& d : dists) {
    for (double t : {0.1, 0.01}) {
      for (Branch b : {Branch::positive, Branch::negative}) {
        const auto r = solve_general(d, t, b);
        for (auto k : {PerturbationKind::case1, PerturbationKind::case2, PerturbationKind::lemma3})
          for (const auto& rep : random_set_perturbations(d, t, r.params, k, 50, 0.5, 9)) CHECK(rep.delta() <= 1e-9);
      }
    }
  }
}

TEST_CASE("piecewise-constant ascent approaches the affine optimum from below") {
  for (const auto& d : {InputDistribution::uniform_symmetric(), InputDistribution::standard_gaussian()}) {
    const double t = 0.05;
    const auto r = solve_general(d, t, Branch::positive);
    const auto v = piecewise_constant_ascent(d, t, r.params, {8, 16, 32, 64});
    REQUIRE(v.size() == 4);
    double prev_gap = kInf;
    for (double s : v) {
      const double gap = r.sndr_star - s;
      CHECK(gap >= -1e-9);
      CHECK(gap < prev_gap);
      prev_gap = gap;
    }
    CHECK(prev_gap < 1e-3 * r.sndr_star);
  }
}

TEST_CASE("Monte Carlo agrees with quadrature") {
  const auto g = InputDistribution::standard_gaussian();
  const double t = noise_ratio_from_dsnr_db(20.0);
  const auto g2 = NonlinearMapping::reference_g2();
  const auto mc = monte_carlo_sndr(g2, g, t, 200000, 2024);
  CHECK(std::abs(mc.estimate - bussgang(g2, g, t).sndr.linear()) <= 3.0 * mc.std_error);
  CHECK(mc.seed == 2024);

  const auto skew = load_fixture("skewed_pdf.csv").dist;
  const auto mc2 = monte_carlo_sndr(g2, skew, t, 200000, 5);
  CHECK(std::abs(mc2.estimate - bussgang(g2, skew, t).sndr.linear()) <= 3.0 * mc2.std_error);
}

TEST_CASE("Monte Carlo contracts") {
  const auto u = InputDistribution::uniform_symmetric();
  const auto c = NonlinearMapping::affine_clipped(0.0, 0.7);
  CHECK(monte_carlo_sndr(c, u, 0.1, 10000, 1).estimate == 0.0);
  const auto g2 = NonlinearMapping::reference_g2();
  const auto a = monte_carlo_sndr(g2, u, 0.1, 10000, 42);
  const auto b = monte_carlo_sndr(g2, u, 0.1, 10000, 42);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(monte_carlo_sndr(g2, u, 0.1, 10000, 43).estimate != a.estimate);
}

TEST_CASE("report csv") {
  std::ostringstream out;
  write_reports_csv(out, {{PerturbationKind::case1, 0.1, 2.0, 1.5, 7}});
  CHECK(out.str() == "kind,magnitude,baseline,perturbed,delta\ncase1,0.10000000000000001,2,1.5,-0.5\n");
}

TEST_CASE("trial streams are reproducible and distinct") {
  auto a = trial_rng(7, 3), b = trial_rng(7, 3), c = trial_rng(7, 4);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
}
