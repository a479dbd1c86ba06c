#pragma once

#include <vector>

#include "distpert/asympt.hpp"
#include "distpert/singlewell.hpp"

// Closed forms for wells b_k delta(x - X_k) on the line. The bound state of
// one well with b < 0 is sqrt(kappa) exp(-kappa |x|), kappa = -b/2.
namespace distpert::point {

double bound_level(double strength);  // -b^2/4, throws for b >= 0
double bound_state(double strength, double x);

// Clusters of the exact single-well levels.
LimitingSpectrum limiting_spectrum(const std::vector<double>& strengths, double cluster_tol);

// A0 at cluster c with entries b_k psi_r(X_k - X_r) psi_k(0).
CouplingMatrix coupling_matrix(const LimitingSpectrum& spectrum, int c, const std::vector<double>& strengths,
                               const std::vector<double>& positions);

// Second-order shift for a level of well 0 only, with the exact resolvent
// (H_j - lambda)^{-1} = G - G(.,0) b_j G(0,.) / (1 + b_j G(0)).
double second_order_shift(double lambda_star, const std::vector<double>& strengths,
                          const std::vector<double>& positions);

}  // namespace distpert::point
