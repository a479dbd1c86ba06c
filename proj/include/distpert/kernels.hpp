#pragma once

#include <span>

namespace distpert {
struct Grid;
}

// Data-parallel inner loops. The serial versions are the reference the
// OpenMP versions are tested and benchmarked against.
namespace distpert::kernels {

namespace serial {
// out = -Delta_h u with homogeneous Dirichlet data.
void laplacian(const Grid& grid, std::span<const double> u, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace serial

namespace omp {
void laplacian(const Grid& grid, std::span<const double> u, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace omp

using omp::axpy;
using omp::dot;
using omp::laplacian;

}  // namespace distpert::kernels
