#pragma once

// Independent reference values: bisection on transcendental equations and
// brute-force quadrature. Nothing here calls the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  if (flo * f(hi) > 0.0) throw std::runtime_error("bisect: no sign change");
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Two wells -a delta at distance l: 2 kappa / a = 1 +- exp(-kappa l).
// Returns {even level, odd level}; the odd level exists only for a l > 2.
inline std::vector<double> delta_pair_levels(double a, double l) {
  std::vector<double> out;
  const double even = bisect([&](double k) { return 2.0 * k / a - 1.0 - std::exp(-k * l); }, 1e-9, a);
  out.push_back(-even * even);
  if (a * l > 2.0) {
    const double odd = bisect([&](double k) { return 2.0 * k / a - 1.0 + std::exp(-k * l); }, 1e-9, 0.5 * a);
    out.push_back(-odd * odd);
  }
  return out;
}

// Wells b1 delta(x), b2 delta(x - l): (2k + b1)(2k + b2) = b1 b2 exp(-2 k l),
// root bracketed in [lo, hi].
inline double delta_unequal_level(double b1, double b2, double l, double lo, double hi) {
  const double k = bisect(
      [&](double k) { return (2.0 * k + b1) * (2.0 * k + b2) - b1 * b2 * std::exp(-2.0 * k * l); }, lo, hi);
  return -k * k;
}

// Bound states of V = -v0 on |x| < w: even k tan(k w) = q, odd -k cot(k w) = q,
// k^2 + q^2 = v0. Ascending.
inline std::vector<double> square_well_levels(double v0, double w) {
  std::vector<double> out;
  const double kmax = std::sqrt(v0);
  auto q = [&](double k) { return std::sqrt(std::max(0.0, v0 - k * k)); };
  const double pi = std::acos(-1.0);
  for (int branch = 0;; ++branch) {
    const double lo = branch * pi / (2.0 * w) + 1e-12;
    if (lo >= kmax) break;
    const double hi = std::min(kmax, (branch + 1) * pi / (2.0 * w) - 1e-12);
    std::function<double(double)> f;
    if (branch % 2 == 0) f = [&](double k) { return k * std::sin(k * w) - q(k) * std::cos(k * w); };
    else f = [&](double k) { return -k * std::cos(k * w) - q(k) * std::sin(k * w); };
    if (f(lo) * f(hi) > 0.0) break;
    const double k = bisect(f, lo, hi);
    out.push_back(k * k - v0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 3x3 determinant of I + b G(|X_i - X_j|) for equal delta wells; its roots in
// kappa are the bound states of the three-well chain.
inline double delta_chain3_det(double b, const double x[3], double kappa) {
  double m[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = (i == j ? 1.0 : 0.0) + b * std::exp(-kappa * std::abs(x[i] - x[j])) / (2.0 * kappa);
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline std::vector<double> delta_chain3_levels(double b, const double x[3], double lo, double hi, int scan = 20000) {
  std::vector<double> out;
  double prev = delta_chain3_det(b, x, lo);
  for (int i = 1; i <= scan; ++i) {
    const double k = lo + (hi - lo) * i / scan;
    const double cur = delta_chain3_det(b, x, k);
    if (prev * cur < 0.0) {
      const double r = bisect([&](double kk) { return delta_chain3_det(b, x, kk); }, k - (hi - lo) / scan, k);
      out.push_back(-r * r);
    }
    prev = cur;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// K0(z) = int_0^inf exp(-z cosh s) ds by the trapezoid rule, which converges
// geometrically for this analytic, double-exponentially decaying integrand.
inline double k0_integral(double z, double step = 0.01) {
  double sum = 0.5 * std::exp(-z);
  for (int i = 1;; ++i) {
    const double term = std::exp(-z * std::cosh(i * step));
    sum += term;
    if (term < 1e-300 || (i * step > 3.0 && term < 1e-18 * sum)) break;
  }
  return sum * step;
}

// Central first and second derivatives, 8th order.
inline double d1(const std::function<double(double)>& f, double x, double h) {
  const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double s = 0.0;
  for (int k = 1; k <= 4; ++k) s += c[k - 1] * (f(x + k * h) - f(x - k * h));
  return s / h;
}

inline double d2(const std::function<double(double)>& f, double x, double h) {
  const double c0 = -205.0 / 72.0;
  const double c[4] = {8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  double s = c0 * f(x);
  for (int k = 1; k <= 4; ++k) s += c[k - 1] * (f(x + k * h) + f(x - k * h));
  return s / (h * h);
}

// Composite Gauss-Legendre (5 points per panel).
inline double integrate(const std::function<double(double)>& f, double a, double b, int panels = 200) {
  const double xg[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  const double wg[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                        0.2369268850561891};
  const double hp = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * hp;
    for (int g = 0; g < 5; ++g) s += wg[g] * f(mid + 0.5 * hp * xg[g]);
  }
  return 0.5 * hp * s;
}

}  // namespace oracle
