#include <cmath>
#include <stdexcept>

#include "distpert/greens.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace distpert;

namespace {
const double pi = std::acos(-1.0);
}

TEST_CASE("decay rate") {
  CHECK(decay_rate(-1.0) == 1.0);
  CHECK(decay_rate(-4.0) == 2.0);
  CHECK_THROWS_AS(decay_rate(0.0), std::domain_error);
  CHECK_THROWS_AS(decay_rate(0.5), std::domain_error);
  const auto sp = SpectralPoint::at(-0.25);
  CHECK(sp.kappa == 0.5);
}

TEST_CASE("closed-form values") {
  CHECK(green_kernel(1, 2.0, -1.0) == doctest::Approx(std::exp(-2.0) / 2.0).epsilon(1e-15));
  CHECK(green_kernel(3, 1.0, -1.0) == doctest::Approx(std::exp(-1.0) / (4.0 * pi)).epsilon(1e-15));
}

TEST_CASE("n=1 solves the ODE with a unit jump") {
  for (double lambda : {-0.3, -1.0, -5.0}) {
    auto u = [&](double x) { return green_kernel(1, std::abs(x), lambda); };
    for (double x : {0.2, 1.0, 3.0}) {
      const double res = -oracle::d2(u, x, 0.01) - lambda * u(x);
      CHECK(std::abs(res) <= 1e-10 * std::abs(lambda * u(x)));
    }
    // integrate -u'' - lambda u = delta over [-e, e]
    const double e = 0.4;
    const double src = -(oracle::d1(u, e, 0.01) - oracle::d1(u, -e, 0.01)) - lambda * 2.0 * oracle::integrate(u, 0.0, e);
    CHECK(src == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("n=3 satisfies the 7-point discrete equation to O(h^2)") {
  const double lambda = -1.0;
  auto g = [&](double x, double y, double z) { return green_kernel(3, std::sqrt(x * x + y * y + z * z), lambda); };
  auto residual = [&](double h) {
    const double x = 1.0, y = 0.5, z = 0.3;
    const double lap = (g(x + h, y, z) + g(x - h, y, z) + g(x, y + h, z) + g(x, y - h, z) + g(x, y, z + h) +
                        g(x, y, z - h) - 6.0 * g(x, y, z)) / (h * h);
    return std::abs(-lap - lambda * g(x, y, z)) / g(x, y, z);
  };
  const double r1 = residual(0.02), r2 = residual(0.01);
  CHECK(r1 < 1e-3);
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("n=2 is K0/(2 pi) with a logarithmic singularity") {
  for (double z : {0.01, 0.1, 0.5, 1.0, 1.99, 2.0, 2.01, 3.0, 8.0, 30.0}) {
    const double ref = oracle::k0_integral(z);
    CHECK(bessel_k0(z) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(green_kernel(2, z, -1.0) == doctest::Approx(ref / (2.0 * pi)).epsilon(1e-12));
  }
  // bounded after removing -ln(t)/(2 pi)
  const double a = green_kernel(2, 1e-6, -1.0) + std::log(1e-6) / (2.0 * pi);
  const double b = green_kernel(2, 1e-8, -1.0) + std::log(1e-8) / (2.0 * pi);
  CHECK(std::abs(a - b) < 1e-8);
  // kappa scaling
  CHECK(green_kernel(2, 1.0, -4.0) == doctest::Approx(green_kernel(2, 2.0, -1.0)).epsilon(1e-14));
}

TEST_CASE("positive and decreasing") {
  for (int n = 1; n <= 3; ++n) {
    double prev = green_kernel(n, 0.05, -1.0);
    for (double t = 0.1; t < 20.0; t += 0.1) {
      const double v = green_kernel(n, t, -1.0);
      CHECK(v > 0.0);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("far field") {
  CHECK(green_kernel(1, 50.0, -1.0) / green_farfield(1, 50.0, -1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(green_kernel(3, 50.0, -2.0) / green_farfield(3, 50.0, -2.0) == doctest::Approx(1.0).epsilon(1e-14));
  const double r2 = green_kernel(2, 50.0, -1.0) / green_farfield(2, 50.0, -1.0);
  CHECK(std::abs(r2 - 1.0) < 0.01);
  // the first correction of K0 is -1/(8 kappa t)
  CHECK((r2 - 1.0) * 8.0 * 50.0 == doctest::Approx(-1.0).epsilon(0.02));
  double worst = 0.0;
  for (double t = 1.0; t <= 100.0; t += 1.0)
    worst = std::max(worst, std::abs(green_kernel(2, t, -1.0) / green_farfield(2, t, -1.0) - 1.0) * t);
  CHECK(worst < 0.2);
}

TEST_CASE("invalid arguments") {
  CHECK_THROWS_AS(green_kernel(4, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(green_kernel(0, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS(green_kernel(1, 0.0, -1.0));
  CHECK_THROWS(green_kernel(2, -1.0, -1.0));
  CHECK_THROWS_AS(green_kernel(3, 1.0, 0.0), std::domain_error);
  CHECK_THROWS(bessel_k0(0.0));
}
