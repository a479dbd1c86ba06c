#include "distpert/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "distpert/kernels.hpp"

namespace distpert {

namespace {

using SparseMatrix = DiscreteOperator::SparseMatrix;
using Vec = Eigen::VectorXd;

// LDL^T of H - sigma with the symbolic analysis shared across shifts.
class ShiftedFactor {
 public:
  explicit ShiftedFactor(const DiscreteOperator& h) : h_(h) {
    identity_.resize(h.matrix().rows(), h.matrix().cols());
    identity_.setIdentity();
    solver_.analyzePattern(h.matrix());
  }

  bool factor(double sigma) {
    sigma_ = sigma;
    shifted_ = h_.matrix() - sigma * identity_;
    solver_.factorize(shifted_);
    return solver_.info() == Eigen::Success;
  }

  long negative_pivots() const {
    const auto& d = solver_.vectorD();
    long c = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d[i] < 0.0) ++c;
    return c;
  }

  Vec solve(const Vec& b) const { return solver_.solve(b); }
  double sigma() const { return sigma_; }

 private:
  const DiscreteOperator& h_;
  SparseMatrix identity_;
  SparseMatrix shifted_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> solver_;
  double sigma_ = 0.0;
};

long count_with(ShiftedFactor& f, double sigma) {
  double s = sigma;
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (f.factor(s)) return f.negative_pivots();
    s += 1e-12 * (1.0 + std::abs(sigma)) * (attempt + 1);
  }
  throw SolverError("LDL^T factorization failed near sigma", std::numeric_limits<double>::infinity());
}

Vec apply_h(const DiscreteOperator& h, const Vec& v) {
  Vec out(v.size());
  h.apply(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
          std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

double rayleigh(const DiscreteOperator& h, const Vec& v) { return v.dot(apply_h(h, v)) / v.squaredNorm(); }

// Most negative Rayleigh quotient over Gaussian probes at each well.
double probe_minimum(const DiscreteOperator& h) {
  const auto& g = h.grid();
  std::vector<std::array<double, 3>> centers;
  for (const auto& w : h.wells()) centers.push_back({w.center[0], g.dim > 1 ? w.center[1] : 0.0, g.dim > 2 ? w.center[2] : 0.0});
  if (centers.empty()) centers.push_back({0.0, 0.0, 0.0});
  const double widths[] = {2.0 * g.h, 0.25, 0.5, 1.0, 2.0, 4.0};
  double best = std::numeric_limits<double>::infinity();
  Vec v(static_cast<Eigen::Index>(g.size()));
  for (const auto& c : centers) {
    for (double w : widths) {
      if (w < g.h) continue;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const auto x = g.position(k);
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
        v[static_cast<Eigen::Index>(k)] = std::exp(-0.5 * r2 / (w * w));
      }
      if (v.squaredNorm() > 0.0) best = std::min(best, rayleigh(h, v));
    }
  }
  return best;
}

void orthogonalize(Vec& v, const Eigen::MatrixXd& basis, Eigen::Index cols) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vec c = basis.leftCols(cols).transpose() * v;
    v.noalias() -= basis.leftCols(cols) * c;
  }
}

struct Candidate {
  double lambda;
  Vec psi;
  double residual;
};

}  // namespace

long count_below(const DiscreteOperator& h, double sigma) {
  ShiftedFactor f(h);
  return count_with(f, sigma);
}

Spectrum lowest_eigenpairs(const DiscreteOperator& h, int k, const EigenOptions& options) {
  if (k < 1) throw std::invalid_argument("lowest_eigenpairs: k must be >= 1");
  const auto& grid = h.grid();
  const auto n = static_cast<Eigen::Index>(h.size());
  // `factor` holds H - sigma for the Lanczos solves; inertia probes at other
  // shifts go through `probe` so the shift factor is never recomputed.
  ShiftedFactor factor(h);
  std::optional<ShiftedFactor> probe_storage;
  auto probe = [&]() -> ShiftedFactor& {
    if (!probe_storage) probe_storage.emplace(h);
    return *probe_storage;
  };

  Spectrum out;
  out.negative_count = count_with(factor, -options.essential_tol);
  const long target = std::min<long>(k, out.negative_count);
  out.fewer_than_requested = target < k;
  if (target == 0) return out;

  // Push the shift below the whole spectrum so H - sigma is positive definite.
  double sigma = probe_minimum(h);
  sigma = sigma < 0.0 ? 1.25 * sigma : -1.0;
  // leaves `factor` holding H - sigma
  for (int guard = 0; count_with(factor, sigma) > 0; ++guard) {
    if (guard > 80) throw SolverError("could not place the shift below the spectrum", std::numeric_limits<double>::infinity());
    sigma *= 2.0;
  }
  out.shift = sigma;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  auto random_vector = [&] {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };

  const Eigen::Index max_locked = std::min<Eigen::Index>(n, target + 16);
  Eigen::MatrixXd locked(n, max_locked);
  std::vector<double> locked_lambda;
  std::vector<double> locked_residual;
  Eigen::Index nl = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  Vec start = random_vector();
  Eigen::Index krylov = 50;

  for (int restart = 0; restart < options.max_restarts; ++restart) {
    const Eigen::Index room = n - nl;
    if (room <= 0) break;
    const Eigen::Index m = std::min<Eigen::Index>(room, std::min<Eigen::Index>(400, std::max<Eigen::Index>(krylov, 3 * (target - nl) + 40)));
    Eigen::MatrixXd q(n, m);
    std::vector<double> alpha, beta;
    orthogonalize(start, locked, nl);
    double sn = start.norm();
    if (sn == 0.0) {
      start = random_vector();
      orthogonalize(start, locked, nl);
      sn = start.norm();
    }
    q.col(0) = start / sn;
    Eigen::Index steps = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Vec w = factor.solve(q.col(j));
      orthogonalize(w, locked, nl);
      const double a = q.col(j).dot(w);
      alpha.push_back(a);
      orthogonalize(w, q, j + 1);
      steps = j + 1;
      const double b = w.norm();
      if (j + 1 == m || b <= 1e-13 * std::abs(a)) break;
      beta.push_back(b);
      q.col(j + 1) = w / b;
    }

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
    for (Eigen::Index i = 0; i < steps; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(t);
    // largest theta <-> lowest lambda
    bool progress = false;
    Vec restart_vec = Vec::Zero(n);
    double pending = std::numeric_limits<double>::infinity();
    double pending_res = 0.0;
    const Eigen::Index wanted = std::min<Eigen::Index>(steps, target - std::min<Eigen::Index>(nl, target) + 3);
    for (Eigen::Index r = 0; r < wanted; ++r) {
      const Eigen::Index col = steps - 1 - r;
      Vec psi = q.leftCols(steps) * ritz.eigenvectors().col(col);
      orthogonalize(psi, locked, nl);
      const double pn = psi.norm();
      if (pn == 0.0) continue;
      psi /= pn;
      const Vec hpsi = apply_h(h, psi);
      const double lambda = psi.dot(hpsi);
      const double res = (hpsi - lambda * psi).norm();
      if (lambda >= -options.essential_tol) continue;
      best_residual = std::min(best_residual, res);
      if (res <= options.tol && nl < max_locked) {
        locked.col(nl) = psi;
        locked_lambda.push_back(lambda);
        locked_residual.push_back(res);
        ++nl;
        progress = true;
      } else {
        restart_vec += psi;
        if (lambda < pending) {
          pending = lambda;
          pending_res = res;
        }
      }
    }

    if (nl >= target) {
      std::vector<double> sorted = locked_lambda;
      std::sort(sorted.begin(), sorted.end());
      const double top = sorted[static_cast<std::size_t>(target - 1)];
      const double slack = std::max(100.0 * options.tol, 1e-9 * std::abs(top));
      const long below = count_with(probe(), top + slack);
      const long found = std::count_if(sorted.begin(), sorted.end(), [&](double l) { return l < top + slack; });
      if (found >= below) break;
      start = random_vector();
      continue;
    }
    start = (progress || restart_vec.squaredNorm() == 0.0) ? random_vector() : Vec(restart_vec + 1e-3 * random_vector());
    if (!progress) krylov = std::min<Eigen::Index>(400, 2 * krylov);
    // Slow convergence usually means sigma sits far below the unlocked
    // levels. Move it up towards the best Ritz estimate, keeping it below
    // every unlocked eigenvalue (checked by inertia).
    if (std::isfinite(pending)) {
      double cand = pending - std::max(0.05 * std::abs(pending), 10.0 * pending_res);
      bool moved = false;
      for (int tries = 0; tries < 2 && cand > sigma; ++tries) {
        if (count_with(probe(), cand) == static_cast<long>(nl)) {
          sigma = cand;
          moved = true;
          break;
        }
        cand = 0.5 * (cand + sigma);
      }
      if (moved) {
        if (!factor.factor(sigma)) throw SolverError("shift-invert refactorization failed", best_residual);
        out.shift = sigma;
      }
    }
    if (restart + 1 == options.max_restarts) {
      std::ostringstream msg;
      msg << "eigensolver did not converge: " << nl << " of " << target << " eigenpairs locked, best residual "
          << best_residual;
      throw SolverError(msg.str(), best_residual);
    }
  }
  if (nl < target) throw SolverError("eigensolver ran out of search space", best_residual);

  std::vector<std::size_t> order(static_cast<std::size_t>(nl));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return locked_lambda[a] < locked_lambda[b]; });
  order.resize(static_cast<std::size_t>(target));

  const double inv_sqrt_w = 1.0 / std::sqrt(grid.weight());
  for (std::size_t idx : order) {
    EigenPair p;
    p.lambda = locked_lambda[idx];
    p.kappa = std::sqrt(-p.lambda);
    p.residual = locked_residual[idx];
    Vec v = locked.col(static_cast<Eigen::Index>(idx));
    Eigen::Index at_max = 0;
    v.cwiseAbs().maxCoeff(&at_max);
    if (v[at_max] < 0.0) v = -v;
    p.psi.assign(v.data(), v.data() + v.size());
    for (auto& x : p.psi) x *= inv_sqrt_w;
    double par = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) par += v[i] * v[n - 1 - i];
    p.parity = par;
    out.pairs.push_back(std::move(p));
  }

  // within near-ties: re-orthonormalize, then even before odd
  const double tie = std::max(10.0 * options.tol, 1e-10);
  for (std::size_t a = 0; a < out.pairs.size();) {
    std::size_t b = a + 1;
    while (b < out.pairs.size() && out.pairs[b].lambda - out.pairs[a].lambda <= tie) ++b;
    if (b - a > 1) {
      for (std::size_t i = a; i < b; ++i) {
        auto& pi = out.pairs[i].psi;
        for (std::size_t j = a; j < i; ++j) {
          const auto& pj = out.pairs[j].psi;
          const double c = grid.inner(pi, pj);
          kernels::axpy(-c, pj, pi);
        }
        const double nn = grid.norm(pi);
        for (auto& x : pi) x /= nn;
      }
      std::stable_sort(out.pairs.begin() + static_cast<long>(a), out.pairs.begin() + static_cast<long>(b),
                       [](const EigenPair& x, const EigenPair& y) { return x.parity > y.parity; });
    }
    a = b;
  }
  return out;
}

GridFunction resolvent_solve(const DiscreteOperator& h, double lambda, std::span<const double> f, double tol) {
  if (!(lambda < 0.0)) throw ResolventRefused("resolvent: lambda inside the essential spectrum [0, inf)");
  if (f.size() != h.size()) throw std::invalid_argument("resolvent: right-hand side size mismatch");
  const auto n = static_cast<Eigen::Index>(h.size());
  const Eigen::Map<const Vec> rhs(f.data(), n);
  const double fn = rhs.norm();
  if (fn == 0.0) return GridFunction(f.size(), 0.0);

  ShiftedFactor factor(h);
  const double gate = 10.0 * tol;
  if (count_with(factor, lambda + gate) != count_with(factor, lambda - gate)) {
    std::ostringstream msg;
    msg << "resolvent: lambda = " << lambda << " lies within " << gate << " of an eigenvalue (ill-conditioned)";
    throw ResolventRefused(msg.str());
  }
  if (!factor.factor(lambda)) throw SolverError("resolvent factorization failed", std::numeric_limits<double>::infinity());

  Vec u = factor.solve(rhs);
  double rn = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 8; ++it) {
    Vec r = rhs - (apply_h(h, u) - lambda * u);
    rn = r.norm();
    if (rn <= tol * fn) return GridFunction(u.data(), u.data() + u.size());
    u += factor.solve(r);
  }
  throw SolverError("resolvent iterative refinement did not reach the tolerance", rn / fn);
}

}  // namespace distpert
