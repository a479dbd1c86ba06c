#include "distpert/point_interaction.hpp"

#include <cmath>
#include <stdexcept>

#include "distpert/greens.hpp"

namespace distpert::point {

namespace {

// G_1(0, lambda), the t -> 0 limit of the kernel.
double green_at_zero(double lambda) { return 0.5 / decay_rate(lambda); }

double green(double t, double lambda) { return t == 0.0 ? green_at_zero(lambda) : green_kernel(1, std::abs(t), lambda); }

}  // namespace

double bound_level(double strength) {
  if (!(strength < 0.0)) throw std::domain_error("point: a delta well binds only for negative strength");
  return -0.25 * strength * strength;
}

double bound_state(double strength, double x) {
  const double kappa = std::sqrt(-bound_level(strength));
  return std::sqrt(kappa) * std::exp(-kappa * std::abs(x));
}

LimitingSpectrum limiting_spectrum(const std::vector<double>& strengths, double cluster_tol) {
  std::vector<std::vector<EigenPair>> wells(strengths.size());
  for (std::size_t k = 0; k < strengths.size(); ++k) {
    if (strengths[k] >= 0.0) continue;
    EigenPair p;
    p.lambda = bound_level(strengths[k]);
    p.kappa = std::sqrt(-p.lambda);
    p.tail_coefficient = std::sqrt(p.kappa);
    p.parity = 1.0;
    wells[k].push_back(std::move(p));
  }
  return cluster_multiplicities(std::move(wells), cluster_tol);
}

CouplingMatrix coupling_matrix(const LimitingSpectrum& spectrum, int c, const std::vector<double>& strengths,
                               const std::vector<double>& positions) {
  const auto& cl = spectrum.clusters.at(static_cast<std::size_t>(c));
  CouplingMatrix a;
  a.lambda_star = cl.lambda_star;
  a.p = cl.p;
  a.alpha = cl.alpha;
  for (const auto& m : cl.members) a.index_map.emplace_back(m.well, m.state);
  a.entries = Eigen::MatrixXd::Zero(a.p, a.p);
  Eigen::MatrixXd raw = a.entries;
  for (int i = 0; i < a.p; ++i) {
    const auto k = static_cast<std::size_t>(a.index_map[static_cast<std::size_t>(i)].first);
    for (int j = 0; j < a.p; ++j) {
      const auto r = static_cast<std::size_t>(a.index_map[static_cast<std::size_t>(j)].first);
      if (r == k) continue;
      raw(i, j) = strengths[k] * bound_state(strengths[r], positions[k] - positions[r]) * bound_state(strengths[k], 0.0);
    }
  }
  a.symmetry_defect = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  a.entries = 0.5 * (raw + raw.transpose());
  return a;
}

double second_order_shift(double lambda_star, const std::vector<double>& strengths,
                          const std::vector<double>& positions) {
  if (strengths.size() != positions.size()) throw std::invalid_argument("point: strengths/positions size mismatch");
  const double b1 = strengths.at(0);
  const double kappa = decay_rate(lambda_star);
  // psi_1 at its own center, normalized for the level lambda*
  const double psi0 = std::sqrt(kappa);
  double shift = 0.0;
  for (std::size_t j = 1; j < strengths.size(); ++j) {
    const double l = positions[j] - positions[0];
    const double denom = 1.0 + strengths[j] * green_at_zero(lambda_star);
    if (std::abs(denom) < 1e-12) throw ResolventRefused("point: lambda* is an eigenvalue of a partner well");
    const double source = strengths[j] * psi0 * std::exp(-kappa * std::abs(l));
    const double u_at_1 = source * green(l, lambda_star) / denom;
    shift -= b1 * u_at_1 * psi0;
  }
  return shift;
}

}  // namespace distpert::point
