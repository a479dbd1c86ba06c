#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "distpert/eigensolver.hpp"
#include "distpert/grid.hpp"
#include "distpert/singlewell.hpp"

namespace distpert {

// p x p real symmetric coupling matrix at one cluster level. Row/column
// i = alpha[k] + q belongs to state q of well k.
struct CouplingMatrix {
  double lambda_star = 0.0;
  int p = 0;
  Eigen::MatrixXd entries;
  std::vector<int> alpha;
  std::vector<std::pair<int, int>> index_map;  // i -> (well, state)
  double symmetry_defect = 0.0;                // max |A_ij - A_ji| before symmetrizing
  bool tail_extended = false;                  // some samples came from the fitted tail law
  double tail_contribution = 0.0;              // max |entry change| attributable to those samples
};

struct Prediction {
  double lambda_star = 0.0;
  std::vector<double> tau;       // 0 <= |tau_1| <= ... <= |tau_p|
  std::vector<double> lambdas;   // lambda_star + tau
  Eigen::MatrixXd kappa_vectors; // column i pairs with tau[i]
  double error_band = 0.0;       // l^{-n+2} exp(-2 l kappa*), unit constant
  double l_x = 0.0;
};

// Value of a single-well eigenfunction at y (relative to the well center).
// Multilinear interpolation inside the stored box; outside it the tail law
// C r^{-(n-1)/2} exp(-kappa r) is used and `extended` is set.
double sample_eigenfunction(const EigenPair& pair, const Grid& grid, std::span<const double> y, bool* extended = nullptr);

// Separation l_X: the smallest pairwise distance between well centers.
double separation(const std::vector<WellPlacement>& wells);

// A0 for cluster `c`. Single-well eigenfunctions live on `grid` (centered at
// the origin) and are shifted by X_k - X_r.
CouplingMatrix coupling_matrix(const LimitingSpectrum& spectrum, int c, const std::vector<WellPlacement>& wells,
                               const Grid& grid);

Prediction leading_predictions(const CouplingMatrix& a, double l_x, int n);

// lambda* -/+ |A_12| for a (1,1) pattern; throws std::invalid_argument otherwise.
std::pair<double, double> two_well_splitting(const CouplingMatrix& a);

// -sum_{j>=2} (L_1 S (H_j - lambda*)^{-1} L_j S psi_1, psi_1) for a level of
// well 0 only. `grid` holds the single-well problems and must contain every
// separation plus a support radius.
double second_order_shift(double lambda_star, const std::vector<WellPlacement>& wells, const EigenPair& psi1,
                          const Grid& grid, double resolvent_tol = 1e-9);

struct Reconstruction {
  std::vector<GridFunction> functions;  // on the multi-well grid, unnormalized
  Eigen::MatrixXd gram;                 // (f_i, f_j)
  Eigen::MatrixXd kappa_gram;           // K^T K
  bool tail_extended = false;
};

Reconstruction reconstruct_eigenfunctions(const Prediction& pred, const LimitingSpectrum& spectrum, int c,
                                          const std::vector<WellPlacement>& wells, const Grid& single_grid,
                                          const Grid& multi_grid);

}  // namespace distpert
