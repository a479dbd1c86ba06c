#include <cmath>
#include <stdexcept>
#include <vector>

#include "distpert/singlewell.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace distpert;

namespace {

double gauss(std::span<const double> x, double depth, double width2) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return -depth * std::exp(-r2 / width2);
}

}  // namespace

TEST_CASE("delta well level, tail coefficient and rate") {
  const Grid g = build_grid(1, 20.0, 0.005);
  const auto pairs = solve_limiting(Perturbation::delta_point(-2.0), g, 3, default_eigen_options(1));
  REQUIRE(pairs.size() == 1);
  CHECK(std::abs(pairs[0].lambda + 1.0) < 2e-3);
  const auto [r1, r2] = default_tail_window(pairs[0], g, 0.0);
  const auto fit = fit_tail_coefficient(pairs[0], g, r1, r2, 0.0);
  CHECK(std::abs(fit.coefficient - 1.0) < 1e-2);
  CHECK(std::abs(fit.power_deviation) < 1e-3);
  CHECK(fit.rate == doctest::Approx(pairs[0].kappa).epsilon(0.02));
  CHECK(fit.residual < 1e-3);

  // the coefficient is linear in psi
  EigenPair twice = pairs[0];
  for (auto& v : twice.psi) v *= 2.0;
  const auto fit2 = fit_tail_coefficient(twice, g, r1, r2, 0.0);
  CHECK(fit2.coefficient / fit.coefficient == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("tail window preconditions") {
  const Grid g = build_grid(1, 12.0, 0.01);
  const auto pairs = solve_limiting(Perturbation::delta_point(-2.0), g, 1, default_eigen_options(1));
  CHECK_THROWS_AS(fit_tail_coefficient(pairs[0], g, 0.5, 6.0, 0.0), std::invalid_argument);   // r1 < R + 1/kappa
  CHECK_THROWS_AS(fit_tail_coefficient(pairs[0], g, 2.0, 11.5, 0.0), std::invalid_argument);  // r2 > L - 2/kappa
  EigenPair cut = pairs[0];
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.position(i)[0]) > 4.0) cut.psi[i] = 0.0;
  CHECK_THROWS_AS(fit_tail_coefficient(cut, g, 2.0, 8.0, 0.0), std::invalid_argument);
}

TEST_CASE("square well levels vs bisection oracle") {
  const auto exact = oracle::square_well_levels(5.0, 1.0);
  const auto pairs = solve_limiting(Perturbation::potential(1, 1.0 + 1e-9, [](std::span<const double>) { return -5.0; }),
                                    build_grid(1, 12.0, 0.002), 6, default_eigen_options(1));
  REQUIRE(pairs.size() == exact.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(std::abs(pairs[i].lambda - exact[i]) < 1e-2);
}

TEST_CASE("repulsive well has no bound states") {
  const auto pairs = solve_limiting(Perturbation::potential(1, 1.0, [](std::span<const double>) { return 1.0; }),
                                    build_grid(1, 10.0, 0.01), 3, default_eigen_options(1));
  CHECK(pairs.empty());
}

TEST_CASE("3D Gaussian well: tail power") {
  const Grid g = build_grid(3, 4.0, 0.25);
  const auto p = Perturbation::potential(3, 1.5, [](std::span<const double> x) { return gauss(x, 16.0, 0.5); });
  const auto pairs = solve_limiting(p, g, 1, default_eigen_options(3));
  REQUIRE(pairs.size() == 1);
  const double r2 = g.half_width - 2.0 / pairs[0].kappa - 0.05;
  const auto fit = fit_tail_coefficient(pairs[0], g, 1.5 + 1.0 / pairs[0].kappa + 0.05, r2, 1.5);
  CHECK(std::abs(fit.power_deviation) <= 0.1);
  CHECK(fit.rate == doctest::Approx(pairs[0].kappa).epsilon(0.05));
  CHECK(fit.coefficient > 0.0);
}

TEST_CASE("2D degenerate level: reproducible basis and orthonormality") {
  const Grid g = build_grid(2, 9.0, 0.1);
  const auto p = Perturbation::potential(2, 2.9, [](std::span<const double> x) { return gauss(x, 8.0, 1.0); });
  auto o1 = default_eigen_options(2);
  auto o2 = o1;
  o1.seed = 1;
  o2.seed = 99;
  const auto a = solve_limiting(p, g, 3, o1);
  const auto b = solve_limiting(p, g, 3, o2);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    double diff = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      diff = std::max(diff, std::abs(a[k].psi[i] - b[k].psi[i]));
      peak = std::max(peak, std::abs(a[k].psi[i]));
    }
    CHECK(diff <= 1e-5 * peak);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(g.inner(a[k].psi, a[j].psi) == doctest::Approx(k == j ? 1.0 : 0.0).epsilon(1e-8));
  }
  // the rotated pair is aligned with the axes: state 1 along x, state 2 along y
  auto moment = [&](const EigenPair& e, int d) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m += g.position(i)[static_cast<std::size_t>(d)] * g.position(i)[static_cast<std::size_t>(d)] * e.psi[i] * e.psi[i];
    return m * g.weight();
  };
  CHECK(moment(a[1], 0) > moment(a[1], 1));
  CHECK(moment(a[2], 1) > moment(a[2], 0));
}

TEST_CASE("clustering") {
  SUBCASE("two identical wells") {
    const auto s = cluster_multiplicities(std::vector<std::vector<double>>{{-1.0}, {-1.0}}, 1e-6);
    REQUIRE(s.clusters.size() == 1);
    CHECK(s.clusters[0].p == 2);
    CHECK(s.clusters[0].pattern == std::vector<int>{1, 1});
    CHECK(s.clusters[0].alpha == std::vector<int>{0, 1});
    CHECK(s.clusters[0].lambda_star == -1.0);
  }
  SUBCASE("distinct levels") {
    const auto s = cluster_multiplicities(std::vector<std::vector<double>>{{-1.0}, {-0.25}}, 1e-6);
    REQUIRE(s.clusters.size() == 2);
    CHECK(s.clusters[0].lambda_star == -1.0);
    CHECK(s.clusters[0].pattern == std::vector<int>{1, 0});
    CHECK(s.clusters[1].pattern == std::vector<int>{0, 1});
  }
  SUBCASE("degenerate levels and offsets") {
    const auto s = cluster_multiplicities(
        std::vector<std::vector<double>>{{-2.0, -1.0, -1.0}, {-1.0, -1.0}, {-1.0 + 1e-7, -0.5}}, 1e-6);
    REQUIRE(s.clusters.size() == 3);
    const auto& c = s.clusters[1];
    CHECK(c.p == 5);
    CHECK(c.pattern == std::vector<int>{2, 2, 1});
    CHECK(c.alpha == std::vector<int>{0, 2, 4});
    REQUIRE(c.members.size() == 5);
    CHECK(c.members[0].well == 0);
    CHECK(c.members[0].state == 1);
    CHECK(c.members[4].well == 2);
    CHECK(c.spread <= 1e-6);
    int total = 0;
    for (const auto& cl : s.clusters) total += cl.p;
    CHECK(total == 7);
  }
  SUBCASE("ambiguous gap") {
    CHECK_THROWS_AS(cluster_multiplicities(std::vector<std::vector<double>>{{-1.0}, {-1.0 - 2.5e-6}}, 1e-6),
                    ClusteringAmbiguity);
  }
}
