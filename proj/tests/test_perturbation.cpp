#include <cmath>
#include <stdexcept>
#include <vector>

#include "distpert/grid.hpp"
#include "distpert/perturbation.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace distpert;

namespace {

GridFunction sample(const Grid& g, const std::function<double(double)>& f) {
  GridFunction u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = f(g.position(i)[0]);
  return u;
}

double r_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("zero potential gives zero") {
  const Grid g = build_grid(1, 5.0, 0.05);
  const auto p = Perturbation::potential(1, 1.0, [](std::span<const double>) { return 0.0; });
  const auto out = apply_perturbation(p, sample(g, [](double x) { return std::cos(x); }), g);
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("square well acts as multiplication inside the support") {
  const Grid g = build_grid(1, 5.0, 0.05);
  const auto p = Perturbation::potential(1, 1.0, [](std::span<const double>) { return -2.0; });
  const auto out = apply_perturbation(p, GridFunction(g.size(), 1.0), g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i)[0];
    if (std::abs(x) < 1.0 - 1e-12) CHECK(out[i] == -2.0);
    else CHECK(out[i] == 0.0);
  }
}

TEST_CASE("output vanishes outside the support for every kind") {
  const Grid g = build_grid(1, 6.0, 0.05);
  const auto u = sample(g, [](double x) { return std::exp(-0.1 * x * x) * (1.0 + x); });
  auto gauss = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
  const std::vector<Perturbation> ps = {
      Perturbation::potential(1, 2.0, [&](std::span<const double> x) { return -gauss(x); }),
      Perturbation::divergence_form(1, 2.0, {[&](std::span<const double> x) { return -0.3 * gauss(x); }},
                                    {[&](std::span<const double> x) { return 0.5 * x[0] * gauss(x); }},
                                    [&](std::span<const double> x) { return -gauss(x); }),
      Perturbation::integral_kernel(1, 2.0, [](std::span<const double> x, std::span<const double> y) {
        return -std::exp(-x[0] * x[0] - y[0] * y[0]);
      })};
  for (const auto& p : ps) {
    const auto out = apply_perturbation(p, u, g);
    double inside = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.position(i)[0];
      if (std::abs(x) >= 2.0) CHECK(out[i] == 0.0);
      else inside = std::max(inside, std::abs(out[i]));
    }
    CHECK(inside > 0.0);
  }
}

TEST_CASE("rank-one kernel agrees with direct quadrature") {
  const Grid g = build_grid(1, 6.0, 0.01);
  const auto p = Perturbation::integral_kernel(1, 3.0, [](std::span<const double> x, std::span<const double> y) {
    return -std::exp(-x[0] * x[0] - y[0] * y[0]);
  });
  auto f = [](double x) { return std::cos(0.7 * x) + 0.2 * x; };
  const auto out = apply_perturbation(p, sample(g, f), g);
  // (L f)(x) = -exp(-x^2) int_{|y|<3} exp(-y^2) f(y) dy
  const double integral = oracle::integrate([&](double y) { return std::exp(-y * y) * f(y); }, -3.0, 3.0);
  for (std::size_t i = 0; i < g.size(); i += 37) {
    const double x = g.position(i)[0];
    if (std::abs(x) >= 3.0) continue;
    CHECK(out[i] == doctest::Approx(-std::exp(-x * x) * integral).epsilon(1e-6));
  }
}

TEST_CASE("linearity") {
  const Grid g = build_grid(2, 4.0, 0.1);
  const auto p = Perturbation::potential(2, 1.5, [](std::span<const double> x) { return -std::exp(-x[0] * x[0] - x[1] * x[1]); });
  GridFunction u(g.size()), v(g.size()), w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    u[i] = std::sin(x[0]) + x[1];
    v[i] = std::cos(x[1] * x[0]);
    w[i] = 2.0 * u[i] - 3.0 * v[i];
  }
  const auto lu = apply_perturbation(p, u, g), lv = apply_perturbation(p, v, g), lw = apply_perturbation(p, w, g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(lw[i] == doctest::Approx(2.0 * lu[i] - 3.0 * lv[i]).epsilon(1e-12));
}

TEST_CASE("symmetry") {
  const Grid g = build_grid(1, 5.0, 0.02);
  const Grid g2 = build_grid(1, 5.0, 0.01);
  const auto v = Perturbation::potential(1, 2.0, [](std::span<const double> x) { return -3.0 * std::exp(-x[0] * x[0]); });
  CHECK(validate_symmetry(v, g, 32, 1) <= 1e-12);

  const auto div = Perturbation::divergence_form(1, 2.0, {[](std::span<const double> x) { return -0.3 * std::exp(-x[0] * x[0]); }},
                                                 {[](std::span<const double> x) { return 0.5 * x[0] * std::exp(-x[0] * x[0]); }},
                                                 [](std::span<const double>) { return -1.0; });
  CHECK(validate_symmetry(div, g, 32, 1) <= 1e-12);
  CHECK(validate_symmetry(div, g2, 32, 1) <= 1e-12);

  auto asym = [](std::span<const double> x, std::span<const double> y) { return std::exp(-x[0] * x[0]) * y[0]; };
  const auto bad = Perturbation::integral_kernel(1, 2.0, asym, SymmetryCheck::skip);
  CHECK(validate_symmetry(bad, g, 32, 1) > 0.1);
  const auto enforced = Perturbation::integral_kernel(1, 2.0, asym);
  CHECK_THROWS_AS(compile(enforced, g), std::invalid_argument);

  // seeded: same seed, same estimate
  CHECK(validate_symmetry(bad, g, 16, 7) == validate_symmetry(bad, g, 16, 7));
}

TEST_CASE("non-symmetric G is rejected at compile time") {
  const Grid g = build_grid(2, 4.0, 0.1);
  auto z = [](std::span<const double>) { return 0.0; };
  auto e = [](std::span<const double> x) { return 0.1 * std::exp(-x[0] * x[0] - x[1] * x[1]); };
  const auto p = Perturbation::divergence_form(2, 1.5, {z, e, z, z}, {z, z}, z);
  CHECK_THROWS_AS(compile(p, g), std::invalid_argument);
}

TEST_CASE("form bound") {
  const Grid g = build_grid(1, 5.0, 0.02);
  const auto v = Perturbation::potential(1, 2.0, [](std::span<const double>) { return -2.0; });
  const auto rv = estimate_form_bound(v, g, 32, 3);
  CHECK(rv.c0_estimate <= 1e-12);
  CHECK(rv.c1_estimate <= 2.0 + 1e-9);
  CHECK(rv.passes);

  auto gfield = [](double c) {
    return [c](std::span<const double> x) { return c * std::exp(-x[0] * x[0]); };
  };
  const auto half = Perturbation::divergence_form(1, 2.0, {gfield(-0.5)}, {}, {});
  const auto rh = estimate_form_bound(half, g, 32, 3);
  CHECK(rh.c0_estimate > 0.3);
  CHECK(rh.c0_estimate < 0.6);
  CHECK(rh.passes);

  const auto strong = Perturbation::divergence_form(1, 2.0, {gfield(-1.5)}, {}, {});
  const auto rs = estimate_form_bound(strong, g, 32, 3);
  CHECK(rs.c0_estimate >= 1.0);
  CHECK_FALSE(rs.passes);

  const auto d = estimate_form_bound(Perturbation::delta_point(-2.0), g, 32, 3);
  CHECK(d.bypassed);
  CHECK(d.passes);
  CHECK_THROWS_AS(estimate_form_bound(v, g, 4, 3), std::invalid_argument);
}

TEST_CASE("grid resolution and construction errors") {
  const Grid coarse = build_grid(1, 5.0, 0.25);
  const auto p = Perturbation::potential(1, 0.5, [](std::span<const double>) { return -1.0; });
  CHECK_THROWS_AS(compile(p, coarse), std::invalid_argument);
  CHECK_THROWS_AS(Perturbation::potential(1, -1.0, [](std::span<const double>) { return 0.0; }), std::invalid_argument);
  CHECK_THROWS_AS(Perturbation::potential(4, 1.0, [](std::span<const double>) { return 0.0; }), std::invalid_argument);
  const ScalarField one = [](std::span<const double>) { return 1.0; };
  CHECK_THROWS_AS(Perturbation::divergence_form(2, 1.0, {one}, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Perturbation::divergence_form(2, 1.0, {}, {one, one, one}, {}), std::invalid_argument);
  const Grid g2 = build_grid(2, 5.0, 0.1);
  CHECK_THROWS_AS(compile(p, g2), std::invalid_argument);
}

TEST_CASE("sampled support is a ball") {
  const Grid g = build_grid(3, 3.0, 0.1);
  const auto p = Perturbation::potential(3, 1.0, [](std::span<const double> x) { return -r_of(x); });
  const auto s = compile(p, g);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.offset_position(i);
    CHECK(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) < 1.0);
  }
  // node count close to the ball volume / h^3
  const double expected = 4.0 / 3.0 * std::acos(-1.0) / 1e-3;
  CHECK(static_cast<double>(s.size()) == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("delta point") {
  const Grid g = build_grid(1, 2.0, 0.01);
  const auto out = apply_perturbation(Perturbation::delta_point(-2.0), GridFunction(g.size(), 1.0), g);
  double integral = 0.0;
  for (double v : out) integral += v * g.h;
  CHECK(integral == doctest::Approx(-2.0).epsilon(1e-14));
}
