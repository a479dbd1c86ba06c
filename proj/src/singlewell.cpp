#include "distpert/singlewell.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Dense>

namespace distpert {

namespace {

void fix_sign_and_parity(EigenPair& p, const Grid& grid) {
  std::size_t at = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < p.psi.size(); ++i)
    if (std::abs(p.psi[i]) > best) {
      best = std::abs(p.psi[i]);
      at = i;
    }
  if (p.psi[at] < 0.0)
    for (auto& x : p.psi) x = -x;
  const std::size_t n = p.psi.size();
  double par = 0.0;
  for (std::size_t i = 0; i < n; ++i) par += p.psi[i] * p.psi[n - 1 - i];
  p.parity = par * grid.weight();
}

void fix_degenerate_basis(std::vector<EigenPair>& pairs, const Grid& grid, double tie) {
  std::vector<double> moment(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto x = grid.position(k);
    double m = 0.0;
    for (int d = 0; d < grid.dim; ++d) m += (d + 1) * x[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
    moment[k] = m;
  }
  for (std::size_t a = 0; a < pairs.size();) {
    std::size_t b = a + 1;
    while (b < pairs.size() && pairs[b].lambda - pairs[a].lambda <= tie) ++b;
    const auto g = static_cast<Eigen::Index>(b - a);
    if (g > 1) {
      Eigen::MatrixXd m(g, g);
      for (Eigen::Index i = 0; i < g; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          const auto& u = pairs[a + static_cast<std::size_t>(i)].psi;
          const auto& v = pairs[a + static_cast<std::size_t>(j)].psi;
          double s = 0.0;
          for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k] * moment[k];
          m(i, j) = m(j, i) = s * grid.weight();
        }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      std::vector<GridFunction> rotated(static_cast<std::size_t>(g), GridFunction(grid.size(), 0.0));
      for (Eigen::Index c = 0; c < g; ++c)
        for (Eigen::Index i = 0; i < g; ++i) {
          const double w = es.eigenvectors()(i, c);
          const auto& src = pairs[a + static_cast<std::size_t>(i)].psi;
          auto& dst = rotated[static_cast<std::size_t>(c)];
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += w * src[k];
        }
      for (Eigen::Index c = 0; c < g; ++c) {
        auto& p = pairs[a + static_cast<std::size_t>(c)];
        p.psi = std::move(rotated[static_cast<std::size_t>(c)]);
        fix_sign_and_parity(p, grid);
      }
    }
    a = b;
  }
}

}  // namespace

std::vector<EigenPair> solve_limiting(const Perturbation& p, const Grid& grid, int k, const EigenOptions& options) {
  std::vector<WellPlacement> wells{{p, std::vector<double>(static_cast<std::size_t>(grid.dim), 0.0)}};
  const auto h = assemble_hamiltonian(grid, wells);
  auto spectrum = lowest_eigenpairs(h, k, options);
  for (auto& pair : spectrum.pairs) fix_sign_and_parity(pair, grid);
  fix_degenerate_basis(spectrum.pairs, grid, std::max(1e-8, 10.0 * options.tol));
  return std::move(spectrum.pairs);
}

std::pair<double, double> default_tail_window(const EigenPair& pair, const Grid& grid, double support_radius) {
  const double inv = 1.0 / pair.kappa;
  const double r1 = support_radius + inv + 2.0 * grid.h;
  double r2 = std::min(grid.half_width - 4.0 * inv, r1 + 8.0 * inv);
  if (r2 <= r1 + 4.0 * grid.h) r2 = grid.half_width - 2.0 * inv - grid.h;
  return {r1, r2};
}

TailFit fit_tail_coefficient(const EigenPair& pair, const Grid& grid, double r1, double r2, double support_radius) {
  if (!(pair.kappa > 0.0)) throw std::invalid_argument("fit_tail_coefficient: eigenpair has no decay rate");
  const double inv = 1.0 / pair.kappa;
  if (!(r1 > support_radius + inv) || !(r2 < grid.half_width - 2.0 * inv) || !(r2 > r1)) {
    std::ostringstream msg;
    msg << "fit_tail_coefficient: window [" << r1 << ", " << r2 << "] must satisfy " << support_radius + inv
        << " < r1 < r2 < " << grid.half_width - 2.0 * inv;
    throw std::invalid_argument(msg.str());
  }
  // shell index -> (sum psi^2, sum r, count)
  std::map<long, std::array<double, 3>> shells;
  double peak = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    peak = std::max(peak, std::abs(pair.psi[k]));
    const auto x = grid.position(k);
    double r2sum = 0.0;
    for (int d = 0; d < grid.dim; ++d) r2sum += x[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
    const double r = std::sqrt(r2sum);
    if (r < r1 || r > r2) continue;
    auto& s = shells[std::lround(r / grid.h)];
    s[0] += pair.psi[k] * pair.psi[k];
    s[1] += r;
    s[2] += 1.0;
  }
  if (shells.size() < 3) throw std::invalid_argument("fit_tail_coefficient: fewer than 3 samples in the window");

  const double p0 = -0.5 * (grid.dim - 1);
  std::vector<double> lr, r, la;
  for (const auto& [key, s] : shells) {
    const double amp = std::sqrt(s[0] / s[2]);
    if (!(amp > 1e-14 * peak))
      throw std::invalid_argument("fit_tail_coefficient: near-zero samples in the window (nodal set)");
    const double rr = s[1] / s[2];
    r.push_back(rr);
    lr.push_back(std::log(rr));
    la.push_back(std::log(amp));
  }
  const auto m = static_cast<Eigen::Index>(r.size());
  TailFit fit;
  fit.r1 = r1;
  fit.r2 = r2;

  // rate frozen, power free: log A + kappa r = c + p log r
  Eigen::MatrixXd a(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto u = static_cast<std::size_t>(i);
    a(i, 0) = 1.0;
    a(i, 1) = lr[u];
    y[i] = la[u] + pair.kappa * r[u];
  }
  const Eigen::VectorXd cp = a.colPivHouseholderQr().solve(y);
  fit.power_deviation = cp[1] - p0;
  fit.residual = std::sqrt((a * cp - y).squaredNorm() / static_cast<double>(m));

  // both frozen: C
  double mean = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) mean += y[i] - p0 * lr[static_cast<std::size_t>(i)];
  fit.coefficient = std::exp(mean / static_cast<double>(m));

  // power frozen, rate free
  Eigen::MatrixXd b(m, 2);
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto u = static_cast<std::size_t>(i);
    b(i, 0) = 1.0;
    b(i, 1) = -r[u];
    z[i] = la[u] - p0 * lr[u];
  }
  fit.rate = b.colPivHouseholderQr().solve(z)[1];
  return fit;
}

LimitingSpectrum cluster_multiplicities(const std::vector<std::vector<double>>& spectra, double cluster_tol) {
  if (!(cluster_tol > 0.0)) throw std::invalid_argument("cluster_multiplicities: cluster_tol must be positive");
  std::vector<ClusterMember> all;
  for (std::size_t w = 0; w < spectra.size(); ++w)
    for (std::size_t q = 0; q < spectra[w].size(); ++q) {
      if (!(spectra[w][q] < 0.0)) throw std::invalid_argument("cluster_multiplicities: eigenvalues must be negative");
      all.push_back({static_cast<int>(w), static_cast<int>(q), spectra[w][q]});
    }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });

  LimitingSpectrum out;
  out.cluster_tol = cluster_tol;
  const int m = static_cast<int>(spectra.size());
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j].lambda - all[i].lambda <= cluster_tol) ++j;
    Cluster c;
    c.members.assign(all.begin() + static_cast<long>(i), all.begin() + static_cast<long>(j));
    std::stable_sort(c.members.begin(), c.members.end(),
                     [](const auto& a, const auto& b) { return a.well != b.well ? a.well < b.well : a.state < b.state; });
    c.pattern.assign(static_cast<std::size_t>(m), 0);
    double sum = 0.0;
    for (const auto& mem : c.members) {
      ++c.pattern[static_cast<std::size_t>(mem.well)];
      sum += mem.lambda;
    }
    c.p = static_cast<int>(c.members.size());
    c.lambda_star = sum / c.p;
    c.spread = all[j - 1].lambda - all[i].lambda;
    c.alpha.assign(static_cast<std::size_t>(m), 0);
    for (int w = 1; w < m; ++w)
      c.alpha[static_cast<std::size_t>(w)] = c.alpha[static_cast<std::size_t>(w - 1)] + c.pattern[static_cast<std::size_t>(w - 1)];
    out.clusters.push_back(std::move(c));
    i = j;
  }
  for (std::size_t c = 1; c < out.clusters.size(); ++c) {
    double hi_min = out.clusters[c].lambda_star;
    for (const auto& mem : out.clusters[c].members) hi_min = std::min(hi_min, mem.lambda);
    double lo_max = out.clusters[c - 1].lambda_star;
    for (const auto& mem : out.clusters[c - 1].members) lo_max = std::max(lo_max, mem.lambda);
    if (hi_min - lo_max < 3.0 * cluster_tol) {
      std::ostringstream msg;
      msg << "ambiguous clustering: levels " << lo_max << " and " << hi_min << " are closer than 3*cluster_tol = "
          << 3.0 * cluster_tol;
      throw ClusteringAmbiguity(msg.str());
    }
  }
  return out;
}

LimitingSpectrum cluster_multiplicities(std::vector<std::vector<EigenPair>> spectra, double cluster_tol) {
  std::vector<std::vector<double>> values(spectra.size());
  for (std::size_t w = 0; w < spectra.size(); ++w)
    for (const auto& p : spectra[w]) values[w].push_back(p.lambda);
  auto out = cluster_multiplicities(values, cluster_tol);
  out.wells = std::move(spectra);
  return out;
}

}  // namespace distpert
