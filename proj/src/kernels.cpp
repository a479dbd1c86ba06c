#include "distpert/kernels.hpp"

#include "distpert/grid.hpp"

namespace distpert::kernels {

namespace {

// One row of the stencil along the contiguous (last) axis.
inline double line_term(const double* u, long i, long n, double c) {
  double left = i > 0 ? u[i - 1] : 0.0;
  double right = i + 1 < n ? u[i + 1] : 0.0;
  return c * (2.0 * u[i] - left - right);
}

}  // namespace

namespace serial {

void laplacian(const Grid& g, std::span<const double> u, std::span<double> out) {
  const long n = g.nodes_per_axis;
  const double c = 1.0 / (g.h * g.h);
  const double* p = u.data();
  if (g.dim == 1) {
    for (long i = 0; i < n; ++i) out[i] = line_term(p, i, n, c);
  } else if (g.dim == 2) {
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        long k = i * n + j;
        double up = i > 0 ? p[k - n] : 0.0;
        double dn = i + 1 < n ? p[k + n] : 0.0;
        out[k] = line_term(p + i * n, j, n, c) + c * (2.0 * p[k] - up - dn);
      }
    }
  } else {
    const long nn = n * n;
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        for (long l = 0; l < n; ++l) {
          long k = i * nn + j * n + l;
          double a0 = i > 0 ? p[k - nn] : 0.0;
          double a1 = i + 1 < n ? p[k + nn] : 0.0;
          double b0 = j > 0 ? p[k - n] : 0.0;
          double b1 = j + 1 < n ? p[k + n] : 0.0;
          out[k] = line_term(p + i * nn + j * n, l, n, c) + c * (4.0 * p[k] - a0 - a1 - b0 - b1);
        }
      }
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace serial

namespace omp {

void laplacian(const Grid& g, std::span<const double> u, std::span<double> out) {
  const long n = g.nodes_per_axis;
  const double c = 1.0 / (g.h * g.h);
  const double* p = u.data();
  double* o = out.data();
  if (g.dim == 1) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) o[i] = line_term(p, i, n, c);
  } else if (g.dim == 2) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        long k = i * n + j;
        double up = i > 0 ? p[k - n] : 0.0;
        double dn = i + 1 < n ? p[k + n] : 0.0;
        o[k] = line_term(p + i * n, j, n, c) + c * (2.0 * p[k] - up - dn);
      }
    }
  } else {
    const long nn = n * n;
#pragma omp parallel for collapse(2) schedule(static)
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        for (long l = 0; l < n; ++l) {
          long k = i * nn + j * n + l;
          double a0 = i > 0 ? p[k - nn] : 0.0;
          double a1 = i + 1 < n ? p[k + nn] : 0.0;
          double b0 = j > 0 ? p[k - n] : 0.0;
          double b1 = j + 1 < n ? p[k + n] : 0.0;
          o[k] = line_term(p + i * nn + j * n, l, n, c) + c * (4.0 * p[k] - a0 - a1 - b0 - b1);
        }
      }
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const long n = static_cast<long>(a.size());
  const double* x = a.data();
  const double* y = b.data();
  double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static)
  for (long i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const long n = static_cast<long>(x.size());
  const double* a = x.data();
  double* b = y.data();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) b[i] += alpha * a[i];
}

}  // namespace omp

}  // namespace distpert::kernels
