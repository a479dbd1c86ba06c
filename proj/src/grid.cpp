#include "distpert/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "distpert/kernels.hpp"

namespace distpert {

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(nodes_per_axis);
  return s;
}

double Grid::weight() const { return std::pow(h, dim); }

Index3 Grid::unflatten(std::size_t flat) const {
  Index3 idx{0, 0, 0};
  const auto n = static_cast<std::size_t>(nodes_per_axis);
  for (int d = dim - 1; d >= 0; --d) {
    idx[static_cast<std::size_t>(d)] = static_cast<long>(flat % n);
    flat /= n;
  }
  return idx;
}

std::size_t Grid::flatten(const Index3& idx) const {
  std::size_t flat = 0;
  for (int d = 0; d < dim; ++d)
    flat = flat * static_cast<std::size_t>(nodes_per_axis) + static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
  return flat;
}

bool Grid::contains(const Index3& idx) const {
  for (int d = 0; d < dim; ++d)
    if (idx[static_cast<std::size_t>(d)] < 0 || idx[static_cast<std::size_t>(d)] >= nodes_per_axis) return false;
  return true;
}

std::array<double, 3> Grid::position(std::size_t flat) const {
  const auto idx = unflatten(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = coord(idx[static_cast<std::size_t>(d)]);
  return x;
}

double Grid::inner(std::span<const double> u, std::span<const double> v) const { return kernels::dot(u, v) * weight(); }

double Grid::norm(std::span<const double> u) const { return std::sqrt(inner(u, u)); }

Grid build_grid(int n, double half_width, double h, double memory_budget) {
  if (n < 1 || n > 3) throw std::invalid_argument("build_grid: dimension must be 1, 2 or 3");
  if (!(half_width > 0.0) || !(h > 0.0)) throw std::invalid_argument("build_grid: half_width and h must be positive");
  Grid g;
  g.dim = n;
  g.half_width = half_width;
  const double ratio = half_width / h;
  const double snapped = std::ceil(ratio - 1e-9);
  if (std::abs(snapped - ratio) > 1e-9 * ratio) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "half_width/h = " << ratio << " is not an integer; h snapped down from " << h << " to "
        << half_width / snapped;
    g.warnings.push_back(msg.str());
  }
  if (snapped < 16) throw std::invalid_argument("build_grid: half_width/h must be at least 16");
  g.h = half_width / snapped;
  g.cells = 2 * static_cast<long>(snapped);
  g.nodes_per_axis = g.cells - 1;
  const double nodes = std::pow(static_cast<double>(g.nodes_per_axis), n);
  if (nodes * kBytesPerNode > memory_budget) {
    std::ostringstream msg;
    msg << "build_grid: " << nodes << " nodes need ~" << nodes * kBytesPerNode / 1e9 << " GB, budget is "
        << memory_budget / 1e9 << " GB";
    throw std::length_error(msg.str());
  }
  return g;
}

DiscreteOperator::DiscreteOperator(Grid grid, std::vector<PlacedWell> wells)
    : grid_(std::move(grid)), wells_(std::move(wells)) {
  const std::size_t n = grid_.size();
  const double c = 1.0 / (grid_.h * grid_.h);
  const auto npa = static_cast<std::size_t>(grid_.nodes_per_axis);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * static_cast<std::size_t>(2 * grid_.dim + 1));
  std::size_t stride = 1;
  std::vector<std::size_t> strides(static_cast<std::size_t>(grid_.dim));
  for (int d = grid_.dim - 1; d >= 0; --d) {
    strides[static_cast<std::size_t>(d)] = stride;
    stride *= npa;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto idx = grid_.unflatten(k);
    const auto row = static_cast<int>(k);
    trip.emplace_back(row, row, 2.0 * grid_.dim * c);
    for (int d = 0; d < grid_.dim; ++d) {
      const auto a = idx[static_cast<std::size_t>(d)];
      const auto s = strides[static_cast<std::size_t>(d)];
      if (a > 0) trip.emplace_back(row, static_cast<int>(k - s), -c);
      if (a + 1 < grid_.nodes_per_axis) trip.emplace_back(row, static_cast<int>(k + s), -c);
    }
  }
  for (const auto& w : wells_) {
    const auto& m = w.sampled.matrix;
    for (int r = 0; r < m.outerSize(); ++r)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it)
        trip.emplace_back(static_cast<int>(w.nodes[static_cast<std::size_t>(it.row())]),
                          static_cast<int>(w.nodes[static_cast<std::size_t>(it.col())]), it.value());
  }
  matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  matrix_.setFromTriplets(trip.begin(), trip.end());
  matrix_.makeCompressed();
}

void DiscreteOperator::apply(std::span<const double> u, std::span<double> out) const {
  kernels::laplacian(grid_, u, out);
  for (const auto& w : wells_) {
    Eigen::VectorXd local(static_cast<Eigen::Index>(w.nodes.size()));
    for (std::size_t i = 0; i < w.nodes.size(); ++i) local[static_cast<Eigen::Index>(i)] = u[w.nodes[i]];
    const Eigen::VectorXd y = w.sampled.matrix * local;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) out[w.nodes[i]] += y[static_cast<Eigen::Index>(i)];
  }
}

GridFunction DiscreteOperator::apply(std::span<const double> u) const {
  GridFunction out(u.size());
  apply(u, out);
  return out;
}

double DiscreteOperator::symmetry_defect(int probes, unsigned long long seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const std::size_t n = size();
  GridFunction u(n), v(n);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    for (auto& x : u) x = gauss(rng);
    for (auto& x : v) x = gauss(rng);
    const auto hu = apply(u);
    const auto hv = apply(v);
    const double defect = std::abs(grid_.inner(hu, v) - grid_.inner(u, hv));
    worst = std::max(worst, defect / (grid_.norm(u) * grid_.norm(v)));
  }
  return worst;
}

DiscreteOperator assemble_hamiltonian(const Grid& grid, const std::vector<WellPlacement>& wells, double required_margin) {
  std::vector<PlacedWell> placed;
  std::vector<std::string> warnings = grid.warnings;
  placed.reserve(wells.size());
  for (std::size_t wi = 0; wi < wells.size(); ++wi) {
    const auto& w = wells[wi];
    if (w.center.size() != static_cast<std::size_t>(grid.dim))
      throw std::invalid_argument("assemble_hamiltonian: well center has wrong dimension");
    PlacedWell pw;
    pw.sampled = compile(w.perturbation, grid);
    pw.requested_center = w.center;
    pw.center.resize(w.center.size());
    double snap2 = 0.0;
    for (int d = 0; d < grid.dim; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const double a = std::round((w.center[ud] + grid.half_width) / grid.h) - 1.0;
      pw.center_index[ud] = static_cast<long>(a);
      pw.center[ud] = grid.coord(pw.center_index[ud]);
      snap2 += (pw.center[ud] - w.center[ud]) * (pw.center[ud] - w.center[ud]);
    }
    pw.snap_distance = std::sqrt(snap2);
    const double radius = w.perturbation.support_radius();
    for (int d = 0; d < grid.dim; ++d) {
      const double gap = grid.half_width - std::abs(pw.center[static_cast<std::size_t>(d)]) - radius;
      if (gap <= 0.0) throw std::invalid_argument("assemble_hamiltonian: well support lies outside the box");
      if (gap < required_margin) {
        std::ostringstream msg;
        msg << "well " << wi << " support is " << gap << " from the boundary, below the margin " << required_margin;
        warnings.push_back(msg.str());
      }
    }
    pw.nodes.reserve(pw.sampled.size());
    for (const auto& o : pw.sampled.offsets) {
      Index3 idx{pw.center_index[0] + o[0], grid.dim > 1 ? pw.center_index[1] + o[1] : 0,
                 grid.dim > 2 ? pw.center_index[2] + o[2] : 0};
      if (!grid.contains(idx)) throw std::invalid_argument("assemble_hamiltonian: well support lies outside the box");
      pw.nodes.push_back(grid.flatten(idx));
    }
    placed.push_back(std::move(pw));
  }
  for (std::size_t a = 0; a < placed.size(); ++a) {
    for (std::size_t b = a + 1; b < placed.size(); ++b) {
      double d2 = 0.0;
      for (int d = 0; d < grid.dim; ++d) {
        const double diff = placed[a].center[static_cast<std::size_t>(d)] - placed[b].center[static_cast<std::size_t>(d)];
        d2 += diff * diff;
      }
      const double reach = wells[a].perturbation.support_radius() + wells[b].perturbation.support_radius();
      if (std::sqrt(d2) <= reach || d2 == 0.0)
        throw std::invalid_argument("assemble_hamiltonian: overlapping supports (wells " + std::to_string(a) + " and " +
                                    std::to_string(b) + ")");
    }
  }
  DiscreteOperator op(grid, std::move(placed));
  op.warnings_ = std::move(warnings);
  return op;
}

}  // namespace distpert
