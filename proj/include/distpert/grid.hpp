#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "distpert/perturbation.hpp"

namespace distpert {

using GridFunction = std::vector<double>;
using Index3 = std::array<long, 3>;

// Uniform tensor grid on [-L, L]^n with Dirichlet boundary. Only interior
// nodes carry unknowns; interior node i (1-based along an axis) sits at
// i*h - L.
struct Grid {
  int dim = 1;
  double half_width = 0.0;
  double h = 0.0;
  long cells = 0;          // 2L/h
  long nodes_per_axis = 0; // cells - 1
  std::vector<std::string> warnings;

  std::size_t size() const;
  double weight() const;  // h^n, the quadrature weight of one node

  // Axis index a in [0, nodes_per_axis) maps to coordinate (a+1)*h - L.
  double coord(long a) const { return static_cast<double>(a + 1) * h - half_width; }
  long center_index() const { return cells / 2 - 1; }

  Index3 unflatten(std::size_t flat) const;
  std::size_t flatten(const Index3& idx) const;
  bool contains(const Index3& idx) const;
  std::array<double, 3> position(std::size_t flat) const;

  double inner(std::span<const double> u, std::span<const double> v) const;
  double norm(std::span<const double> u) const;
};

inline constexpr double kDefaultMemoryBudget = 16e9;
// Estimated solver footprint per node (work vectors plus factor fill).
inline constexpr double kBytesPerNode = 160.0;

// Throws std::invalid_argument on bad n/L/h or when the grid is coarser than
// 16 cells per half-width, std::length_error when the memory budget is
// exceeded. A non-integer L/h snaps h downward and records a warning.
Grid build_grid(int n, double half_width, double h, double memory_budget = kDefaultMemoryBudget);

struct WellPlacement {
  Perturbation perturbation;
  std::vector<double> center;
};

struct PlacedWell {
  SampledPerturbation sampled;
  std::vector<double> requested_center;
  std::vector<double> center;  // snapped onto a node
  double snap_distance = 0.0;
  Index3 center_index{};
  std::vector<std::size_t> nodes;  // global indices of the support nodes
};

// -Delta_h + sum_i S(-X_i) L_i S(X_i) on a grid. Immutable after assembly.
class DiscreteOperator {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  DiscreteOperator(Grid grid, std::vector<PlacedWell> wells);

  const Grid& grid() const { return grid_; }
  const std::vector<PlacedWell>& wells() const { return wells_; }
  const SparseMatrix& matrix() const { return matrix_; }
  std::size_t size() const { return grid_.size(); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Matrix-free action (OpenMP stencil plus local well blocks).
  void apply(std::span<const double> u, std::span<double> out) const;
  GridFunction apply(std::span<const double> u) const;

  // max |(Hu,v) - (u,Hv)| / (|u||v|) over seeded random probes.
  double symmetry_defect(int probes, unsigned long long seed) const;

 private:
  friend DiscreteOperator assemble_hamiltonian(const Grid&, const std::vector<WellPlacement>&, double);
  Grid grid_;
  std::vector<PlacedWell> wells_;
  SparseMatrix matrix_;
  std::vector<std::string> warnings_;
};

// Throws std::invalid_argument for overlapping supports or supports leaving
// the box. Records a warning when a support is closer than `required_margin`
// to the boundary.
DiscreteOperator assemble_hamiltonian(const Grid& grid, const std::vector<WellPlacement>& wells,
                                      double required_margin = 0.0);

}  // namespace distpert
