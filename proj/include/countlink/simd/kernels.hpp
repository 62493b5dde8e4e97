#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace countlink::simd {

// Function table for the data-parallel inner loops. Every entry has a scalar
// reference implementation; vectorized variants must agree with it to within
// a few ulp per element (summation order differs, so sums are not bit-equal).
struct KernelTable {
  std::string_view name;

  // sum_i softplus(x[i])
  double (*softplus_sum)(const double* x, std::size_t n);

  // sum_i softplus(base[i] + delta * coef[i])
  double (*softplus_axpy_sum)(const double* base, const double* coef, double delta,
                              std::size_t n);

  // out[i] = softplus(base[i] + delta * coef[i])
  void (*softplus_axpy)(const double* base, const double* coef, double delta, double* out,
                        std::size_t n);

  // sum_j |x[j] - xi|
  double (*abs_diff_sum)(const double* x, double xi, std::size_t n);

  // sum_j (|x[j]-xi| - rx[j] - cx) * (|y[j]-yi| - ry[j] - cy)
  double (*centered_dot)(const double* x, const double* rx, double xi, double cx,
                         const double* y, const double* ry, double yi, double cy,
                         std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the binary was built without AVX2 support or the CPU lacks
// AVX2/FMA.
const KernelTable* avx2_kernels();

// Selected once per process: the widest supported table, unless the
// environment variable COUNTLINK_SIMD=scalar forces the reference path.
const KernelTable& active_kernels();

inline double softplus_sum(std::span<const double> x) {
  return active_kernels().softplus_sum(x.data(), x.size());
}

inline double softplus_axpy_sum(std::span<const double> base, std::span<const double> coef,
                                double delta) {
  return active_kernels().softplus_axpy_sum(base.data(), coef.data(), delta, base.size());
}

inline void softplus_axpy(std::span<const double> base, std::span<const double> coef,
                          double delta, std::span<double> out) {
  active_kernels().softplus_axpy(base.data(), coef.data(), delta, out.data(), base.size());
}

}  // namespace countlink::simd
