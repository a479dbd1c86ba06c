#include <cmath>
#include <stdexcept>
#include <vector>

#include "distpert/eigensolver.hpp"
#include "distpert/greens.hpp"
#include "distpert/grid.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace distpert;

namespace {

const double pi = std::acos(-1.0);

DiscreteOperator delta_operator(const std::vector<double>& xs, double a, double half, double h) {
  std::vector<WellPlacement> w;
  for (double x : xs) w.push_back({Perturbation::delta_point(-a), {x}});
  return assemble_hamiltonian(build_grid(1, half, h), w);
}

std::vector<double> levels(const DiscreteOperator& op, int k) {
  std::vector<double> out;
  for (const auto& p : lowest_eigenpairs(op, k, default_eigen_options(op.grid().dim)).pairs) out.push_back(p.lambda);
  return out;
}

}  // namespace

TEST_CASE("grid construction") {
  CHECK(build_grid(1, 10.0, 0.01).size() == 1999);
  CHECK(build_grid(2, 10.0, 0.1).size() == 199u * 199u);
  CHECK(build_grid(3, 4.0, 0.25).size() == 31u * 31u * 31u);
  CHECK_THROWS_AS(build_grid(3, 20.0, 0.05), std::length_error);
  CHECK_THROWS_AS(build_grid(1, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(4, 10.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, 10.0, -0.1), std::invalid_argument);
  const Grid snapped = build_grid(1, 10.0, 0.03);
  CHECK(snapped.h <= 0.03);
  CHECK(std::abs(snapped.cells * snapped.h - 20.0) < 1e-12);
  CHECK_FALSE(snapped.warnings.empty());
  CHECK(build_grid(1, 10.0, 0.01).warnings.empty());
}

TEST_CASE("index maps round trip") {
  const Grid g = build_grid(3, 4.0, 0.25);
  for (std::size_t i = 0; i < g.size(); i += 7) CHECK(g.flatten(g.unflatten(i)) == i);
  const auto c = g.center_index();
  const auto x = g.position(g.flatten({c, c, c}));
  CHECK(std::abs(x[0]) + std::abs(x[1]) + std::abs(x[2]) < 1e-12);
}

TEST_CASE("free box: no negative eigenvalues, lowest Dirichlet mode by inertia") {
  const Grid g = build_grid(1, 10.0, 0.01);
  const auto op = assemble_hamiltonian(g, {});
  CHECK(lowest_eigenpairs(op, 3, default_eigen_options(1)).pairs.empty());
  const double mu = std::pow(pi / 20.0, 2);
  CHECK(count_below(op, mu * (1.0 - 1e-3)) == 0);
  CHECK(count_below(op, mu * (1.0 + 1e-3)) == 1);
  CHECK(count_below(op, 4.0 * mu * (1.0 + 1e-3)) == 2);
}

TEST_CASE("single delta well") {
  const auto op = delta_operator({0.0}, 2.0, 15.0, 0.005);
  const auto sp = lowest_eigenpairs(op, 3, default_eigen_options(1));
  REQUIRE(sp.pairs.size() == 1);
  CHECK(sp.negative_count == 1);
  const auto& p = sp.pairs[0];
  CHECK(std::abs(p.lambda + 1.0) < 2e-3);
  CHECK(p.residual < 1e-8);
  CHECK(p.parity == doctest::Approx(1.0).epsilon(1e-8));
  const Grid& g = op.grid();
  CHECK(g.norm(p.psi) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < g.size(); i += 50) {
    const double x = g.position(i)[0];
    if (std::abs(x) <= 5.0) CHECK(std::abs(p.psi[i] - std::exp(-std::abs(x))) < 1e-2);
  }
}

TEST_CASE("delta pair vs transcendental oracle") {
  for (double l : {3.0, 6.0}) {
    const auto exact = oracle::delta_pair_levels(2.0, l);
    const auto op = delta_operator({-0.5 * l, 0.5 * l}, 2.0, 0.5 * l + 15.0, 0.005);
    const auto sp = lowest_eigenpairs(op, 4, default_eigen_options(1));
    REQUIRE(sp.pairs.size() == 2);
    CHECK(std::abs(sp.pairs[0].lambda - exact[0]) < 1e-5);
    CHECK(std::abs(sp.pairs[1].lambda - exact[1]) < 1e-5);
    CHECK(sp.pairs[0].parity > 0.99);
    CHECK(sp.pairs[1].parity < -0.99);
  }
}

TEST_CASE("square well vs bisection oracle") {
  const double v0 = 12.0, w = 1.0;
  const auto exact = oracle::square_well_levels(v0, w);
  REQUIRE(exact.size() == 3);
  const Grid g = build_grid(1, 12.0, 0.002);
  const auto p = Perturbation::potential(1, w + 1e-9, [&](std::span<const double>) { return -v0; });
  const auto op = assemble_hamiltonian(g, {{p, {0.0}}});
  const auto got = levels(op, 6);
  REQUIRE(got.size() == exact.size());
  // a jump in V on a node grid is first order in h
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - exact[i]) < 2e-2);
}

TEST_CASE("eigenvalue converges as h^2") {
  const double l1 = levels(delta_operator({0.0}, 2.0, 12.0, 0.02), 1)[0];
  const double l2 = levels(delta_operator({0.0}, 2.0, 12.0, 0.01), 1)[0];
  const double l3 = levels(delta_operator({0.0}, 2.0, 12.0, 0.005), 1)[0];
  CHECK((l1 - l2) / (l2 - l3) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("box truncation is exponentially small") {
  // a Dirichlet wall at distance L moves the level by about 4 exp(-2L)
  const double a = levels(delta_operator({0.0}, 2.0, 10.0, 0.01), 1)[0];
  const double b = levels(delta_operator({0.0}, 2.0, 20.0, 0.01), 1)[0];
  CHECK((a - b) / std::exp(-20.0) == doctest::Approx(4.0).epsilon(0.05));
  const double c = levels(delta_operator({0.0}, 2.0, 16.0, 0.01), 1)[0];
  CHECK(std::abs(c - b) < 1e-12);
}

TEST_CASE("2D Gaussian well: degenerate p states and ordering") {
  const Grid g = build_grid(2, 9.0, 0.1);
  const auto p = Perturbation::potential(2, 2.9, [](std::span<const double> x) { return -8.0 * std::exp(-x[0] * x[0] - x[1] * x[1]); });
  const auto op = assemble_hamiltonian(g, {{p, {0.0, 0.0}}});
  auto opts = default_eigen_options(2);
  opts.tol = 1e-9;
  const auto sp = lowest_eigenpairs(op, 4, opts);
  REQUIRE(sp.pairs.size() >= 3);
  CHECK(sp.pairs[0].parity > 0.99);
  CHECK(std::abs(sp.pairs[1].lambda - sp.pairs[2].lambda) < 1e-7);
  CHECK(sp.pairs[1].parity < -0.99);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(g.inner(sp.pairs[i].psi, sp.pairs[j].psi) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
  // the solver lower bound: no eigenvalue below min V
  CHECK(sp.pairs[0].lambda > -8.0);
}

TEST_CASE("assembled operator is symmetric") {
  const Grid g = build_grid(1, 15.0, 0.01);
  auto gauss = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
  const std::vector<WellPlacement> w = {
      {Perturbation::divergence_form(1, 2.5, {[&](std::span<const double> x) { return -0.3 * gauss(x); }},
                                     {[&](std::span<const double> x) { return 0.5 * x[0] * gauss(x); }},
                                     [&](std::span<const double> x) { return -3.0 * gauss(x); }),
       {-5.0}},
      {Perturbation::integral_kernel(1, 2.5, [](std::span<const double> x, std::span<const double> y) {
         return -1.5 * std::exp(-x[0] * x[0] - y[0] * y[0]);
       }),
       {5.0}},
      {Perturbation::delta_point(-1.0), {0.0}}};
  const auto op = assemble_hamiltonian(g, w);
  CHECK(op.symmetry_defect(32, 9) <= 1e-10);
  // matrix-free action equals the assembled matrix
  Eigen::VectorXd u = Eigen::VectorXd::Random(static_cast<Eigen::Index>(g.size()));
  const auto a = op.apply(std::span<const double>(u.data(), g.size()));
  const Eigen::VectorXd b = op.matrix() * u;
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(a[i] == doctest::Approx(b[static_cast<Eigen::Index>(i)]).epsilon(1e-12));
}

TEST_CASE("assembly errors and warnings") {
  const Grid g = build_grid(1, 10.0, 0.01);
  auto v = [](std::span<const double>) { return -1.0; };
  CHECK_THROWS_AS(assemble_hamiltonian(g, {{Perturbation::potential(1, 2.0, v), {0.0}},
                                           {Perturbation::potential(1, 2.0, v), {3.0}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble_hamiltonian(g, {{Perturbation::potential(1, 2.0, v), {9.0}}}), std::invalid_argument);
  const auto near = assemble_hamiltonian(g, {{Perturbation::potential(1, 2.0, v), {5.0}}}, 6.0);
  CHECK_FALSE(near.warnings().empty());
  const auto off = assemble_hamiltonian(g, {{Perturbation::delta_point(-1.0), {0.0123}}});
  CHECK(off.wells()[0].snap_distance > 0.0);
  CHECK(off.wells()[0].snap_distance <= 0.5 * g.h + 1e-12);
}

TEST_CASE("resolvent") {
  const Grid g = build_grid(1, 20.0, 0.01);
  const auto free_op = assemble_hamiltonian(g, {});
  // narrow normalized bump -> approximately the Green kernel
  const double w = 0.05;
  GridFunction f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i)[0];
    f[i] = std::exp(-x * x / (2 * w * w)) / (std::sqrt(2 * pi) * w);
  }
  const auto u = resolvent_solve(free_op, -1.0, f, 1e-10);
  for (double x : {0.5, 1.0, 3.0}) {
    const std::size_t i = static_cast<std::size_t>(std::lround((x + 20.0) / g.h)) - 1;
    CHECK(u[i] == doctest::Approx(green_kernel(1, x, -1.0)).epsilon(2e-3));
  }
  // residual check
  auto r = free_op.apply(u);
  double rn = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    rn += std::pow(r[i] + u[i] - f[i], 2);
    fn += f[i] * f[i];
  }
  CHECK(std::sqrt(rn / fn) <= 1e-10);

  const auto zero = resolvent_solve(free_op, -1.0, GridFunction(g.size(), 0.0));
  for (double v : zero) CHECK(v == 0.0);
  CHECK_THROWS_AS(resolvent_solve(free_op, 0.0, f), ResolventRefused);
  CHECK_THROWS_AS(resolvent_solve(free_op, 0.5, f), ResolventRefused);

  const auto well = delta_operator({0.0}, 2.0, 20.0, 0.01);
  const double lam = levels(well, 1)[0];
  CHECK_THROWS_AS(resolvent_solve(well, lam, f), ResolventRefused);
  CHECK_NOTHROW(resolvent_solve(well, -0.5, f));
}

TEST_CASE("determinism and solver failure") {
  const auto op = delta_operator({-3.0, 3.0}, 2.0, 15.0, 0.01);
  const auto a = lowest_eigenpairs(op, 2, default_eigen_options(1));
  const auto b = lowest_eigenpairs(op, 2, default_eigen_options(1));
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].lambda == b.pairs[i].lambda);
    CHECK(a.pairs[i].psi == b.pairs[i].psi);
  }
  auto opts = default_eigen_options(1);
  opts.tol = 1e-18;
  opts.max_restarts = 2;
  CHECK_THROWS_AS(lowest_eigenpairs(op, 2, opts), SolverError);
}
