#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "distpert/grid.hpp"

namespace distpert {

struct EigenPair {
  double lambda = 0.0;
  double kappa = 0.0;    // sqrt(-lambda)
  GridFunction psi;      // sum psi^2 h^n = 1, positive at its max-amplitude node
  double residual = 0.0; // |H psi - lambda psi| in the grid norm
  double parity = 0.0;   // (psi, P psi) for the reflection x -> -x
  double tail_coefficient = 0.0;  // filled by fit_tail_coefficient
};

struct EigenOptions {
  double tol = 1e-9;              // residual target
  double essential_tol = 1e-6;    // eigenvalues above -essential_tol count as essential spectrum
  int max_restarts = 60;
  std::uint64_t seed = 0x5eed;
};

inline EigenOptions default_eigen_options(int dim) {
  EigenOptions o;
  o.tol = dim == 1 ? 1e-9 : 1e-7;
  return o;
}

struct Spectrum {
  std::vector<EigenPair> pairs;  // ascending
  long negative_count = 0;       // eigenvalues below -essential_tol (exact, by inertia)
  bool fewer_than_requested = false;
  double shift = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

class ResolventRefused : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Number of eigenvalues of H strictly below sigma (Sylvester inertia of an
// LDL^T factorization of H - sigma).
long count_below(const DiscreteOperator& h, double sigma);

// Up to k lowest eigenpairs with eigenvalue < -essential_tol. Throws
// SolverError when the restart budget runs out.
Spectrum lowest_eigenpairs(const DiscreteOperator& h, int k, const EigenOptions& options);

// u with |(H - lambda) u - f| <= tol |f|. Throws ResolventRefused when
// lambda >= 0 or an eigenvalue of H lies within 10 tol of lambda.
GridFunction resolvent_solve(const DiscreteOperator& h, double lambda, std::span<const double> f, double tol = 1e-9);

}  // namespace distpert
