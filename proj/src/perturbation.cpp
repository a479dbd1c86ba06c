#include "distpert/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "distpert/grid.hpp"

namespace distpert {

const char* to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::Potential: return "potential";
    case PerturbationKind::DivergenceForm: return "divergence";
    case PerturbationKind::IntegralKernel: return "kernel";
    case PerturbationKind::DeltaPoint: return "delta";
  }
  return "unknown";
}

namespace {

void check_common(int dim, double radius) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("perturbation: dimension must be 1, 2 or 3");
  if (!(radius > 0.0)) throw std::invalid_argument("perturbation: support radius must be positive");
}

// Dense lookup from node offsets to support-local indices.
class OffsetMap {
 public:
  OffsetMap(int dim, int reach) : dim_(dim), reach_(reach), width_(2 * reach + 1) {
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(width_);
    slots_.assign(total, -1);
  }

  long& at(const std::array<int, 3>& o) { return slots_[slot(o)]; }

  long find(const std::array<int, 3>& o) const {
    for (int d = 0; d < dim_; ++d)
      if (o[d] < -reach_ || o[d] > reach_) return -1;
    return slots_[slot(o)];
  }

 private:
  std::size_t slot(const std::array<int, 3>& o) const {
    std::size_t s = 0;
    for (int d = 0; d < dim_; ++d) s = s * static_cast<std::size_t>(width_) + static_cast<std::size_t>(o[d] + reach_);
    return s;
  }

  int dim_;
  int reach_;
  int width_;
  std::vector<long> slots_;
};

struct SupportLayout {
  std::vector<std::array<int, 3>> offsets;
  OffsetMap map;
};

SupportLayout layout_support(int dim, double radius, double h) {
  const int reach = static_cast<int>(std::ceil(radius / h)) + 1;
  SupportLayout out{{}, OffsetMap(dim, reach)};
  std::array<int, 3> o{0, 0, 0};
  const int lo = -reach;
  const int hi = reach;
  // lexicographic sweep, last axis fastest
  std::array<int, 3> start{lo, dim > 1 ? lo : 0, dim > 2 ? lo : 0};
  std::array<int, 3> stop{hi, dim > 1 ? hi : 0, dim > 2 ? hi : 0};
  for (o[0] = start[0]; o[0] <= stop[0]; ++o[0]) {
    for (o[1] = start[1]; o[1] <= stop[1]; ++o[1]) {
      for (o[2] = start[2]; o[2] <= stop[2]; ++o[2]) {
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) r2 += (o[d] * h) * (o[d] * h);
        if (std::sqrt(r2) < radius) {
          out.map.at(o) = static_cast<long>(out.offsets.size());
          out.offsets.push_back(o);
        }
      }
    }
  }
  return out;
}

std::array<double, 3> position_of(const std::array<int, 3>& o, double h) {
  return {o[0] * h, o[1] * h, o[2] * h};
}

std::array<int, 3> shifted(std::array<int, 3> o, int axis, int step) {
  o[axis] += step;
  return o;
}

}  // namespace

Perturbation Perturbation::potential(int dim, double support_radius, ScalarField v) {
  check_common(dim, support_radius);
  Perturbation p;
  p.kind_ = PerturbationKind::Potential;
  p.dim_ = dim;
  p.support_radius_ = support_radius;
  p.v_ = std::move(v);
  return p;
}

Perturbation Perturbation::divergence_form(int dim, double support_radius, std::vector<ScalarField> g,
                                           std::vector<ScalarField> drift, ScalarField b0) {
  check_common(dim, support_radius);
  if (!g.empty() && g.size() != static_cast<std::size_t>(dim * dim))
    throw std::invalid_argument("divergence form: G needs dim*dim entries");
  if (!drift.empty() && drift.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("divergence form: drift needs dim entries");
  Perturbation p;
  p.kind_ = PerturbationKind::DivergenceForm;
  p.dim_ = dim;
  p.support_radius_ = support_radius;
  p.g_ = std::move(g);
  p.drift_ = std::move(drift);
  p.b0_ = std::move(b0);
  return p;
}

Perturbation Perturbation::integral_kernel(int dim, double support_radius, KernelField kernel, SymmetryCheck check) {
  check_common(dim, support_radius);
  Perturbation p;
  p.kind_ = PerturbationKind::IntegralKernel;
  p.dim_ = dim;
  p.support_radius_ = support_radius;
  p.kernel_ = std::move(kernel);
  p.check_ = check;
  return p;
}

Perturbation Perturbation::delta_point(double strength) {
  Perturbation p;
  p.kind_ = PerturbationKind::DeltaPoint;
  p.dim_ = 1;
  p.support_radius_ = 0.0;
  p.strength_ = strength;
  return p;
}

std::array<double, 3> SampledPerturbation::offset_position(std::size_t i) const { return position_of(offsets[i], h); }

Eigen::VectorXd SampledPerturbation::apply(const Eigen::VectorXd& u) const { return matrix * u; }

Eigen::VectorXd SampledPerturbation::sample(const std::function<double(std::span<const double>)>& f) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    auto x = offset_position(i);
    out[static_cast<Eigen::Index>(i)] = f(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
  }
  return out;
}

SampledPerturbation compile(const Perturbation& p, const Grid& grid) {
  if (p.dim() != grid.dim) throw std::invalid_argument("perturbation and grid dimensions differ");
  const double h = grid.h;
  SampledPerturbation s;
  s.kind = p.kind();
  s.dim = p.dim();
  s.h = h;
  s.support_radius = p.support_radius();
  s.strength = p.strength();

  if (p.kind() == PerturbationKind::DeltaPoint) {
    s.offsets = {{0, 0, 0}};
    s.matrix.resize(1, 1);
    s.matrix.insert(0, 0) = p.strength() / h;
    s.matrix.makeCompressed();
    return s;
  }

  if (2.0 * p.support_radius() / h < 8.0)
    throw std::invalid_argument("grid too coarse to resolve support (fewer than 8 nodes across the diameter)");

  auto layout = layout_support(p.dim(), p.support_radius(), h);
  s.offsets = layout.offsets;
  const auto n = static_cast<Eigen::Index>(s.offsets.size());
  const std::size_t dim = static_cast<std::size_t>(p.dim());
  std::vector<Eigen::Triplet<double>> trip;

  auto pos = [&](const std::array<int, 3>& o) { return position_of(o, h); };
  auto at = [&](const ScalarField& f, const std::array<double, 3>& x) {
    return f ? f(std::span<const double>(x.data(), dim)) : 0.0;
  };

  switch (p.kind()) {
    case PerturbationKind::Potential: {
      for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, at(p.v_, pos(s.offsets[static_cast<std::size_t>(i)])));
      break;
    }
    case PerturbationKind::DivergenceForm: {
      const double ih2 = 1.0 / (h * h);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = s.offsets[static_cast<std::size_t>(i)];
        const auto x = pos(o);
        trip.emplace_back(i, i, at(p.b0_, x));
        if (!p.g_.empty() && p.check_ == SymmetryCheck::enforce) {
          for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = a + 1; b < dim; ++b) {
              double gab = at(p.g_[a * dim + b], x);
              double gba = at(p.g_[b * dim + a], x);
              if (std::abs(gab - gba) > 1e-12 * std::max(1.0, std::abs(gab)))
                throw std::invalid_argument("divergence form: G is not symmetric at a sample");
            }
        }
        for (std::size_t d = 0; d < dim; ++d) {
          const auto nb = shifted(o, static_cast<int>(d), 1);
          const long j = layout.map.find(nb);
          if (j < 0) continue;
          // compact flux term on the edge (o, o + e_d)
          if (!p.g_.empty()) {
            auto mid = x;
            mid[d] += 0.5 * h;
            const double g = at(p.g_[d * dim + d], mid) * ih2;
            trip.emplace_back(i, i, -g);
            trip.emplace_back(j, j, -g);
            trip.emplace_back(i, j, g);
            trip.emplace_back(j, i, g);
          }
          // real antisymmetric drift b d - d b
          if (!p.drift_.empty()) {
            const double bi = at(p.drift_[d], x);
            const double bj = at(p.drift_[d], pos(nb));
            const double c = (bi - bj) / (2.0 * h);
            trip.emplace_back(i, j, c);
            trip.emplace_back(j, i, c);
          }
        }
        // mixed terms -G_ab(x) D_a u D_b v with centered differences
        if (!p.g_.empty()) {
          for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b < dim; ++b) {
              if (a == b) continue;
              const double g = at(p.g_[a * dim + b], x);
              if (g == 0.0) continue;
              std::array<long, 2> ia{layout.map.find(shifted(o, static_cast<int>(a), 1)),
                                     layout.map.find(shifted(o, static_cast<int>(a), -1))};
              std::array<long, 2> ib{layout.map.find(shifted(o, static_cast<int>(b), 1)),
                                     layout.map.find(shifted(o, static_cast<int>(b), -1))};
              if (ia[0] < 0 || ia[1] < 0 || ib[0] < 0 || ib[1] < 0) continue;
              const double c = -g / (4.0 * h * h);
              for (int sa = 0; sa < 2; ++sa)
                for (int sb = 0; sb < 2; ++sb) {
                  const double sign = (sa == sb) ? 1.0 : -1.0;
                  trip.emplace_back(ia[static_cast<std::size_t>(sa)], ib[static_cast<std::size_t>(sb)], sign * c);
                }
            }
          }
        }
      }
      break;
    }
    case PerturbationKind::IntegralKernel: {
      const double w = grid.weight();
      std::vector<std::array<double, 3>> xs(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = pos(s.offsets[static_cast<std::size_t>(i)]);
      auto kern = [&](Eigen::Index i, Eigen::Index j) {
        return p.kernel_(std::span<const double>(xs[static_cast<std::size_t>(i)].data(), dim),
                         std::span<const double>(xs[static_cast<std::size_t>(j)].data(), dim));
      };
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const double kij = kern(i, j);
          if (p.check_ == SymmetryCheck::enforce && j > i) {
            const double kji = kern(j, i);
            if (std::abs(kij - kji) > 1e-12 * std::max(1.0, std::abs(kij)))
              throw std::invalid_argument("integral kernel: L(x,y) != L(y,x) at a sample pair");
          }
          if (kij != 0.0) trip.emplace_back(i, j, kij * w);
        }
      }
      break;
    }
    case PerturbationKind::DeltaPoint: break;
  }

  s.matrix.resize(n, n);
  s.matrix.setFromTriplets(trip.begin(), trip.end());
  s.matrix.makeCompressed();
  return s;
}

std::vector<double> apply_perturbation(const Perturbation& p, std::span<const double> u, const Grid& grid) {
  if (u.size() != grid.size()) throw std::invalid_argument("apply_perturbation: grid function size mismatch");
  const auto s = compile(p, grid);
  const long c = grid.center_index();
  Eigen::VectorXd local(static_cast<Eigen::Index>(s.size()));
  std::vector<std::size_t> flat(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    Index3 idx{c + s.offsets[i][0], grid.dim > 1 ? c + s.offsets[i][1] : 0, grid.dim > 2 ? c + s.offsets[i][2] : 0};
    if (!grid.contains(idx)) throw std::invalid_argument("apply_perturbation: grid does not cover the support");
    flat[i] = grid.flatten(idx);
    local[static_cast<Eigen::Index>(i)] = u[flat[i]];
  }
  Eigen::VectorXd out = s.apply(local);
  std::vector<double> result(grid.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) result[flat[i]] = out[static_cast<Eigen::Index>(i)];
  return result;
}

Eigen::VectorXd random_test_function(const SampledPerturbation& s, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double radius = std::max(s.support_radius, s.h);
  const double cutoff = 0.85 * radius;
  const double k_max = 0.5 * std::numbers::pi / s.h;  // stay well below Nyquist
  std::array<double, 3> center{}, wave{}, slope{};
  for (int d = 0; d < s.dim; ++d) {
    center[static_cast<std::size_t>(d)] = 0.3 * radius * unit(rng);
    wave[static_cast<std::size_t>(d)] = std::min(k_max, scale / radius) * unit(rng);
    slope[static_cast<std::size_t>(d)] = unit(rng) / radius;
  }
  const double width = radius * (0.25 + 0.35 * (unit(rng) + 1.0));
  const double phase = std::numbers::pi * unit(rng);
  return s.sample([&](std::span<const double> x) {
    double r2 = 0.0, d2 = 0.0, kx = phase, poly = 1.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      r2 += x[d] * x[d];
      d2 += (x[d] - center[d]) * (x[d] - center[d]);
      kx += wave[d] * x[d];
      poly += slope[d] * x[d];
    }
    const double t = r2 / (cutoff * cutoff);
    if (t >= 1.0) return 0.0;
    const double bump = (1.0 - t) * (1.0 - t) * (1.0 - t);
    return bump * std::exp(-0.5 * d2 / (width * width)) * poly * std::cos(kx);
  });
}

double validate_symmetry(const Perturbation& p, const Grid& grid, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("validate_symmetry: trials must be >= 1");
  if (p.kind() == PerturbationKind::DeltaPoint) return 0.0;
  const auto s = compile(p, grid);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double scale = 1.0 + 2.0 * (t % 4);
    Eigen::VectorXd u1 = random_test_function(s, rng, scale);
    Eigen::VectorXd u2 = random_test_function(s, rng, scale);
    const double n1 = u1.norm(), n2 = u2.norm();
    if (n1 == 0.0 || n2 == 0.0) continue;
    const double defect = std::abs(s.apply(u1).dot(u2) - u1.dot(s.apply(u2)));
    worst = std::max(worst, defect / (n1 * n2));
  }
  return worst;
}

namespace {

// Discrete |grad u|^2 (unweighted) for support-local samples; u is taken as
// zero off the support.
double gradient_energy(const SampledPerturbation& s, const Eigen::VectorXd& u) {
  const int reach = static_cast<int>(std::ceil(s.support_radius / s.h)) + 1;
  OffsetMap map(s.dim, reach);
  for (std::size_t i = 0; i < s.offsets.size(); ++i) map.at(s.offsets[i]) = static_cast<long>(i);
  double e = 0.0;
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    for (int d = 0; d < s.dim; ++d) {
      const long up = map.find(shifted(s.offsets[i], d, 1));
      const long dn = map.find(shifted(s.offsets[i], d, -1));
      const double ui = u[static_cast<Eigen::Index>(i)];
      const double uu = up >= 0 ? u[up] : 0.0;
      e += (uu - ui) * (uu - ui);
      if (dn < 0) e += ui * ui;  // edge leaving the support on the low side
    }
  }
  return e / (s.h * s.h);
}

}  // namespace

HypothesisReport estimate_form_bound(const Perturbation& p, const Grid& grid, int trials, std::uint64_t seed) {
  if (trials < 16) throw std::invalid_argument("estimate_form_bound: needs at least 16 trials");
  HypothesisReport report;
  report.trials = trials;
  if (p.kind() == PerturbationKind::DeltaPoint) {
    report.bypassed = true;
    return report;
  }
  report.symmetry_defect = validate_symmetry(p, grid, std::max(1, trials / 4), seed ^ 0x9e3779b97f4a7c15ULL);

  const auto s = compile(p, grid);
  std::mt19937_64 rng(seed);
  const double scales[] = {0.0, 2.0, 5.0, 10.0, 20.0, 40.0};
  struct Sample {
    double form, grad, mass;
  };
  std::vector<Sample> samples;
  for (int t = 0; t < trials; ++t) {
    const double scale = scales[static_cast<std::size_t>(t) % std::size(scales)];
    Eigen::VectorXd u = random_test_function(s, rng, scale);
    const double mass = u.squaredNorm();
    if (mass == 0.0) continue;
    samples.push_back({std::abs(s.apply(u).dot(u)), gradient_energy(s, u), mass});
  }

  // Smallest feasible (c0, c1) >= 0 under the objective c1 + T c0, where T is
  // the geometric mean of the sampled gradient/mass ratios. The optimum sits
  // at c0 = 0, at some F_k/g_k, or where two constraint lines cross.
  double ratio_min = std::numeric_limits<double>::infinity(), ratio_max = 0.0;
  for (const auto& q : samples) {
    ratio_min = std::min(ratio_min, q.grad / q.mass);
    ratio_max = std::max(ratio_max, q.grad / q.mass);
  }
  const double weight = std::sqrt(ratio_min * ratio_max);
  auto c1_for = [&](double c0) {
    double c1 = 0.0;
    for (const auto& q : samples) c1 = std::max(c1, (q.form - c0 * q.grad) / q.mass);
    return c1;
  };
  std::vector<double> candidates{0.0};
  for (const auto& q : samples)
    if (q.grad > 0.0) candidates.push_back(q.form / q.grad);
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      const auto& qa = samples[a];
      const auto& qb = samples[b];
      const double den = qa.grad / qa.mass - qb.grad / qb.mass;
      if (std::abs(den) < 1e-300) continue;
      const double c0 = (qa.form / qa.mass - qb.form / qb.mass) / den;
      if (c0 > 0.0) candidates.push_back(c0);
    }
  double best = std::numeric_limits<double>::infinity();
  for (double c0 : candidates) {
    const double c1 = c1_for(c0);
    const double objective = c1 + weight * c0;
    if (objective < best * (1.0 - 1e-12)) {
      best = objective;
      report.c0_estimate = c0;
      report.c1_estimate = c1;
    }
  }
  report.passes = report.c0_estimate < 1.0;
  return report;
}

}  // namespace distpert
