#include "countlink/simd/kernels.hpp"

#include <cmath>

namespace countlink::simd {
namespace {

inline double softplus_ref(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += softplus_ref(x[i]);
  return acc;
}

double softplus_axpy_sum_scalar(const double* base, const double* coef, double delta,
                                std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += softplus_ref(base[i] + delta * coef[i]);
  return acc;
}

void softplus_axpy_scalar(const double* base, const double* coef, double delta, double* out,
                          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = softplus_ref(base[i] + delta * coef[i]);
}

double abs_diff_sum_scalar(const double* x, double xi, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += std::abs(x[j] - xi);
  return acc;
}

double centered_dot_scalar(const double* x, const double* rx, double xi, double cx,
                           const double* y, const double* ry, double yi, double cy,
                           std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double a = std::abs(x[j] - xi) - rx[j] - cx;
    const double b = std::abs(y[j] - yi) - ry[j] - cy;
    acc += a * b;
  }
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",
      softplus_sum_scalar,
      softplus_axpy_sum_scalar,
      softplus_axpy_scalar,
      abs_diff_sum_scalar,
      centered_dot_scalar,
  };
  return table;
}

}  // namespace countlink::simd
