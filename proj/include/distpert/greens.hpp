#pragma once

// Free-resolvent kernel of (-Laplacian - lambda) in R^n for real lambda < 0.

namespace distpert {

// lambda < 0 together with its decay rate kappa = sqrt(-lambda).
struct SpectralPoint {
  double lambda;
  double kappa;

  static SpectralPoint at(double lambda);
};

// sqrt(-lambda); throws std::domain_error for lambda >= 0.
double decay_rate(double lambda);

// Modified Bessel function K0 for z > 0. Series below z = 2, Steed's
// continued fraction above.
double bessel_k0(double z);

// G_n(t, lambda) for n in {1,2,3}:
//   n=1: exp(-kappa t) / (2 kappa)
//   n=2: K0(kappa t) / (2 pi)
//   n=3: exp(-kappa t) / (4 pi t)
double green_kernel(int n, double t, double lambda);

// Leading far-field term c_n(lambda) t^{-(n-1)/2} exp(-kappa t), normalized so
// that green_kernel / green_farfield -> 1 as t -> infinity.
double green_farfield(int n, double t, double lambda);

}  // namespace distpert
