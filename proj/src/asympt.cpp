#include "distpert/asympt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace distpert {

namespace {

// Multilinear interpolation of a grid function at y; false outside [-L, L]^n.
// Nodes just outside the interior carry the Dirichlet value 0.
bool interpolate(const GridFunction& f, const Grid& grid, std::span<const double> y, double& value) {
  std::array<long, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int d = 0; d < grid.dim; ++d) {
    const auto ud = static_cast<std::size_t>(d);
    const double u = (y[ud] + grid.half_width) / grid.h - 1.0;
    if (u < -1.0 - 1e-9 || u > static_cast<double>(grid.nodes_per_axis) + 1e-9) return false;
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) {
      base[ud] = static_cast<long>(r);
      frac[ud] = 0.0;
    } else {
      base[ud] = static_cast<long>(std::floor(u));
      frac[ud] = u - std::floor(u);
    }
  }
  double acc = 0.0;
  const int corners = 1 << grid.dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    Index3 idx{0, 0, 0};
    for (int d = 0; d < grid.dim; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const bool up = (c >> d) & 1;
      if (up && frac[ud] == 0.0) {
        w = 0.0;
        break;
      }
      w *= up ? frac[ud] : 1.0 - frac[ud];
      idx[ud] = base[ud] + (up ? 1 : 0);
    }
    if (w == 0.0 || !grid.contains(idx)) continue;
    acc += w * f[grid.flatten(idx)];
  }
  value = acc;
  return true;
}

Eigen::VectorXd support_values(const GridFunction& f, const Grid& grid, const SampledPerturbation& s) {
  const long c = grid.center_index();
  Eigen::VectorXd out(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& o = s.offsets[i];
    Index3 idx{c + o[0], grid.dim > 1 ? c + o[1] : 0, grid.dim > 2 ? c + o[2] : 0};
    out[static_cast<Eigen::Index>(i)] = grid.contains(idx) ? f[grid.flatten(idx)] : 0.0;
  }
  return out;
}

// Samples psi(x_a + shift) on the support nodes of s. `ext` marks samples
// taken from the tail law.
Eigen::VectorXd shifted_samples(const EigenPair& pair, const Grid& grid, const SampledPerturbation& s,
                                const std::vector<double>& shift, std::vector<bool>& ext) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
  ext.assign(s.size(), false);
  std::vector<double> y(static_cast<std::size_t>(grid.dim));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.offset_position(i);
    for (int d = 0; d < grid.dim; ++d) y[static_cast<std::size_t>(d)] = x[static_cast<std::size_t>(d)] + shift[static_cast<std::size_t>(d)];
    bool e = false;
    v[static_cast<Eigen::Index>(i)] = sample_eigenfunction(pair, grid, y, &e);
    ext[i] = e;
  }
  return v;
}

std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

double sample_eigenfunction(const EigenPair& pair, const Grid& grid, std::span<const double> y, bool* extended) {
  double v = 0.0;
  if (interpolate(pair.psi, grid, y, v)) {
    if (extended) *extended = false;
    return v;
  }
  if (extended) *extended = true;
  double r2 = 0.0;
  for (int d = 0; d < grid.dim; ++d) r2 += y[static_cast<std::size_t>(d)] * y[static_cast<std::size_t>(d)];
  const double r = std::sqrt(r2);
  return pair.tail_coefficient * std::pow(r, -0.5 * (grid.dim - 1)) * std::exp(-pair.kappa * r);
}

double separation(const std::vector<WellPlacement>& wells) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < wells.size(); ++a)
    for (std::size_t b = a + 1; b < wells.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < wells[a].center.size(); ++d)
        d2 += (wells[a].center[d] - wells[b].center[d]) * (wells[a].center[d] - wells[b].center[d]);
      best = std::min(best, std::sqrt(d2));
    }
  return best;
}

CouplingMatrix coupling_matrix(const LimitingSpectrum& spectrum, int c, const std::vector<WellPlacement>& wells,
                               const Grid& grid) {
  if (c < 0 || c >= static_cast<int>(spectrum.clusters.size())) throw std::out_of_range("coupling_matrix: cluster index");
  const auto& cl = spectrum.clusters[static_cast<std::size_t>(c)];
  if (cl.pattern.size() != wells.size()) throw std::invalid_argument("coupling_matrix: well count mismatch");
  CouplingMatrix a;
  a.lambda_star = cl.lambda_star;
  a.p = cl.p;
  a.alpha = cl.alpha;
  for (const auto& m : cl.members) a.index_map.emplace_back(m.well, m.state);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(a.p, a.p);

  std::vector<SampledPerturbation> sampled;
  sampled.reserve(wells.size());
  for (const auto& w : wells) sampled.push_back(compile(w.perturbation, grid));

  const double weight = grid.weight();
  for (int i = 0; i < a.p; ++i) {
    const auto [k, q] = a.index_map[static_cast<std::size_t>(i)];
    const auto& sk = sampled[static_cast<std::size_t>(k)];
    const auto& psi_k = spectrum.wells[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)];
    const Eigen::VectorXd target = support_values(psi_k.psi, grid, sk);
    for (int j = 0; j < a.p; ++j) {
      const auto [r, s] = a.index_map[static_cast<std::size_t>(j)];
      if (r == k) continue;
      const auto& psi_r = spectrum.wells[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)];
      std::vector<bool> ext;
      const auto shift = difference(wells[static_cast<std::size_t>(k)].center, wells[static_cast<std::size_t>(r)].center);
      Eigen::VectorXd v = shifted_samples(psi_r, grid, sk, shift, ext);
      raw(i, j) = sk.apply(v).dot(target) * weight;
      if (std::find(ext.begin(), ext.end(), true) != ext.end()) {
        a.tail_extended = true;
        for (std::size_t t = 0; t < ext.size(); ++t)
          if (!ext[t]) v[static_cast<Eigen::Index>(t)] = 0.0;
        a.tail_contribution = std::max(a.tail_contribution, std::abs(sk.apply(v).dot(target) * weight));
      }
    }
  }
  a.symmetry_defect = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  a.entries = 0.5 * (raw + raw.transpose());
  return a;
}

Prediction leading_predictions(const CouplingMatrix& a, double l_x, int n) {
  Prediction pr;
  pr.lambda_star = a.lambda_star;
  pr.l_x = l_x;
  if (std::isfinite(l_x) && l_x > 0.0)
    pr.error_band = std::pow(l_x, 2.0 - n) * std::exp(-2.0 * l_x * std::sqrt(-a.lambda_star));
  if (a.p == 0) return pr;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.entries);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  const double tie = 1e-12 * scale;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(a.p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    const double ax = std::abs(ev[x]), ay = std::abs(ev[y]);
    if (std::abs(ax - ay) > tie) return ax < ay;
    return ev[x] < ev[y];
  });
  pr.kappa_vectors.resize(a.p, a.p);
  for (int i = 0; i < a.p; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    pr.tau.push_back(ev[src]);
    pr.lambdas.push_back(a.lambda_star + ev[src]);
    Eigen::VectorXd v = es.eigenvectors().col(src);
    const double big = v.cwiseAbs().maxCoeff();
    for (Eigen::Index t = 0; t < v.size(); ++t)
      if (std::abs(v[t]) > 1e-8 * big) {
        if (v[t] < 0.0) v = -v;
        break;
      }
    pr.kappa_vectors.col(i) = v;
  }
  return pr;
}

std::pair<double, double> two_well_splitting(const CouplingMatrix& a) {
  if (a.p != 2 || a.index_map[0].first == a.index_map[1].first)
    throw std::invalid_argument("two_well_splitting: needs a (1,1) multiplicity pattern");
  const double t = std::abs(a.entries(0, 1));
  return {a.lambda_star - t, a.lambda_star + t};
}

double second_order_shift(double lambda_star, const std::vector<WellPlacement>& wells, const EigenPair& psi1,
                          const Grid& grid, double resolvent_tol) {
  if (wells.size() < 2) return 0.0;
  const auto s1 = compile(wells[0].perturbation, grid);
  const Eigen::VectorXd psi1_supp = support_values(psi1.psi, grid, s1);
  const double weight = grid.weight();
  const std::vector<double> origin(static_cast<std::size_t>(grid.dim), 0.0);
  double shift = 0.0;
  for (std::size_t j = 1; j < wells.size(); ++j) {
    const auto hj = assemble_hamiltonian(grid, {{wells[j].perturbation, origin}});
    const auto& placed = hj.wells()[0];
    std::vector<bool> ext;
    const auto to_j = difference(wells[j].center, wells[0].center);
    const Eigen::VectorXd v = shifted_samples(psi1, grid, placed.sampled, to_j, ext);
    if (std::find(ext.begin(), ext.end(), true) != ext.end())
      throw std::invalid_argument("second_order_shift: grid does not contain the well separation");
    const Eigen::VectorXd fj = placed.sampled.apply(v);
    GridFunction f(grid.size(), 0.0);
    for (std::size_t t = 0; t < placed.nodes.size(); ++t) f[placed.nodes[t]] = fj[static_cast<Eigen::Index>(t)];
    const GridFunction u = resolvent_solve(hj, lambda_star, f, resolvent_tol);

    Eigen::VectorXd w(static_cast<Eigen::Index>(s1.size()));
    std::vector<double> y(static_cast<std::size_t>(grid.dim));
    for (std::size_t t = 0; t < s1.size(); ++t) {
      const auto x = s1.offset_position(t);
      for (int d = 0; d < grid.dim; ++d) y[static_cast<std::size_t>(d)] = x[static_cast<std::size_t>(d)] - to_j[static_cast<std::size_t>(d)];
      double val = 0.0;
      if (!interpolate(u, grid, y, val))
        throw std::invalid_argument("second_order_shift: grid does not contain the well separation");
      w[static_cast<Eigen::Index>(t)] = val;
    }
    shift -= s1.apply(w).dot(psi1_supp) * weight;
  }
  return shift;
}

Reconstruction reconstruct_eigenfunctions(const Prediction& pred, const LimitingSpectrum& spectrum, int c,
                                          const std::vector<WellPlacement>& wells, const Grid& single_grid,
                                          const Grid& multi_grid) {
  const auto& cl = spectrum.clusters.at(static_cast<std::size_t>(c));
  const auto p = static_cast<std::size_t>(cl.p);
  if (static_cast<std::size_t>(pred.kappa_vectors.cols()) != p) throw std::invalid_argument("reconstruct: size mismatch");
  Reconstruction rec;
  const std::size_t n = multi_grid.size();
  std::vector<GridFunction> basis(p, GridFunction(n, 0.0));
  std::vector<double> y(static_cast<std::size_t>(multi_grid.dim));
  for (std::size_t m = 0; m < p; ++m) {
    const auto& mem = cl.members[m];
    const auto& pair = spectrum.wells[static_cast<std::size_t>(mem.well)][static_cast<std::size_t>(mem.state)];
    const auto& center = wells[static_cast<std::size_t>(mem.well)].center;
    for (std::size_t k = 0; k < n; ++k) {
      const auto x = multi_grid.position(k);
      for (int d = 0; d < multi_grid.dim; ++d)
        y[static_cast<std::size_t>(d)] = x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
      bool e = false;
      basis[m][k] = sample_eigenfunction(pair, single_grid, y, &e);
      rec.tail_extended = rec.tail_extended || e;
    }
  }
  rec.functions.assign(p, GridFunction(n, 0.0));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t m = 0; m < p; ++m) {
      const double k = pred.kappa_vectors(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
      auto& f = rec.functions[i];
      for (std::size_t t = 0; t < n; ++t) f[t] += k * basis[m][t];
    }
  rec.gram.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      rec.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rec.gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
              multi_grid.inner(rec.functions[i], rec.functions[j]);
  rec.kappa_gram = pred.kappa_vectors.transpose() * pred.kappa_vectors;
  return rec;
}

}  // namespace distpert
