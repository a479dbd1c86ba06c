#pragma once

#include <stdexcept>
#include <vector>

#include "distpert/eigensolver.hpp"
#include "distpert/grid.hpp"
#include "distpert/perturbation.hpp"

namespace distpert {

// Eigenpairs of -Delta + L with L centered at the origin node of `grid`.
// States inside a degenerate level are rotated to diagonalize the moment
// sum_d (d+1) x_d^2 so the basis is reproducible.
std::vector<EigenPair> solve_limiting(const Perturbation& p, const Grid& grid, int k, const EigenOptions& options);

struct TailFit {
  double coefficient = 0.0;       // C in C r^{-(n-1)/2} exp(-kappa r)
  double power_deviation = 0.0;   // fitted power minus -(n-1)/2 (rate frozen at kappa)
  double rate = 0.0;              // exponential rate with the slope unfrozen (power frozen)
  double residual = 0.0;          // rms residual of the frozen-rate fit in log space
  double r1 = 0.0, r2 = 0.0;
};

// Fits the tail law on r in [r1, r2]. For n >= 2 the samples are rms averages
// over shells of width h. Throws std::invalid_argument if the window violates
// r1 > support_radius + 1/kappa, r2 < half_width - 2/kappa, or contains
// (near-)zero samples.
TailFit fit_tail_coefficient(const EigenPair& pair, const Grid& grid, double r1, double r2, double support_radius);

// Window used when the caller has no preference.
std::pair<double, double> default_tail_window(const EigenPair& pair, const Grid& grid, double support_radius);

struct ClusterMember {
  int well = 0;
  int state = 0;  // index into that well's eigenpair list
  double lambda = 0.0;
};

struct Cluster {
  double lambda_star = 0.0;
  std::vector<int> pattern;  // p_i per well
  std::vector<int> alpha;    // block offsets, alpha[0] = 0
  int p = 0;
  std::vector<ClusterMember> members;  // ordered by (well, state): member i sits at alpha[well] + q
  double spread = 0.0;
};

struct LimitingSpectrum {
  std::vector<std::vector<EigenPair>> wells;
  std::vector<Cluster> clusters;  // ascending lambda_star
  double cluster_tol = 0.0;
};

class ClusteringAmbiguity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Greedy clustering of the per-well eigenvalues. Throws ClusteringAmbiguity
// when two clusters sit closer than 3 cluster_tol.
LimitingSpectrum cluster_multiplicities(const std::vector<std::vector<double>>& spectra, double cluster_tol);
LimitingSpectrum cluster_multiplicities(std::vector<std::vector<EigenPair>> spectra, double cluster_tol);

}  // namespace distpert
