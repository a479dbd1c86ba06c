#include "distpert/greens.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace distpert {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

void check_args(int n, double t, double lambda) {
  if (n < 1 || n > 3) throw std::invalid_argument("green kernel: unsupported dimension " + std::to_string(n));
  if (!(t > 0.0)) throw std::domain_error("green kernel: distance must be positive (kernel singularity at t = 0)");
  if (!(lambda < 0.0)) throw std::domain_error("non-negative spectral parameter");
}

// K0(z) = -(ln(z/2) + gamma) I0(z) + sum_{k>=1} (z^2/4)^k / (k!)^2 * H_k
double k0_series(double z) {
  const double q = 0.25 * z * z;
  double term = 1.0;  // (z^2/4)^k / (k!)^2
  double i0 = 1.0;
  double harmonic = 0.0;
  double tail = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    i0 += term;
    tail += term * harmonic;
    if (term * harmonic < 1e-18 * std::abs(tail)) break;
  }
  return -(std::log(0.5 * z) + kEulerGamma) * i0 + tail;
}

// Steed's method (CF2) with Temme's normalization, order 0.
double k0_continued_fraction(double z) {
  double b = 2.0 * (1.0 + z);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 10000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-17) break;
  }
  return std::sqrt(std::numbers::pi / (2.0 * z)) * std::exp(-z) / s;
}

}  // namespace

SpectralPoint SpectralPoint::at(double lambda) { return {lambda, decay_rate(lambda)}; }

double decay_rate(double lambda) {
  if (!(lambda < 0.0)) throw std::domain_error("non-negative spectral parameter");
  return std::sqrt(-lambda);
}

double bessel_k0(double z) {
  if (!(z > 0.0)) throw std::domain_error("bessel_k0: argument must be positive");
  return z <= 2.0 ? k0_series(z) : k0_continued_fraction(z);
}

double green_kernel(int n, double t, double lambda) {
  check_args(n, t, lambda);
  const double kappa = std::sqrt(-lambda);
  switch (n) {
    case 1: return std::exp(-kappa * t) / (2.0 * kappa);
    case 2: return bessel_k0(kappa * t) / (2.0 * std::numbers::pi);
    default: return std::exp(-kappa * t) / (4.0 * std::numbers::pi * t);
  }
}

double green_farfield(int n, double t, double lambda) {
  check_args(n, t, lambda);
  const double kappa = std::sqrt(-lambda);
  const double c = std::pow(kappa, 0.5 * (n - 3)) /
                   (std::pow(2.0, 0.5 * (n + 1)) * std::pow(std::numbers::pi, 0.5 * (n - 1)));
  return c * std::pow(t, -0.5 * (n - 1)) * std::exp(-kappa * t);
}

}  // namespace distpert
