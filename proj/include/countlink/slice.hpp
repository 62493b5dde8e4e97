#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>

namespace countlink {

using Rng = std::mt19937_64;

// Univariate slice sampling with linear stepping-out and shrinkage.
struct SliceConfig {
  double initial_width = 1.0;
  std::size_t max_step_outs = 64;  // per side

  void validate() const;
};

namespace detail {
double slice_uniform(Rng& rng);
double slice_exponential(Rng& rng);
[[noreturn]] void slice_fail(const char* what);
}  // namespace detail

// One slice-sampling update of x0 under an unnormalized log density. Returns
// the accepted point; the target distribution is left invariant.
template <class LogDensity>
double slice_sample_1d(LogDensity&& log_density, double x0, const SliceConfig& cfg, Rng& rng) {
  const double f0 = log_density(x0);
  if (!std::isfinite(f0)) detail::slice_fail("slice_sample_1d: log density not finite at x0");
  const double level = f0 - detail::slice_exponential(rng);

  const double width = cfg.initial_width;
  double left = x0 - width * detail::slice_uniform(rng);
  double right = left + width;
  for (std::size_t j = 0; j < cfg.max_step_outs && log_density(left) > level; ++j) left -= width;
  for (std::size_t j = 0; j < cfg.max_step_outs && log_density(right) > level; ++j) right += width;

  for (;;) {
    const double x1 = left + detail::slice_uniform(rng) * (right - left);
    if (log_density(x1) > level) return x1;
    if (x1 < x0) {
      left = x1;
    } else {
      right = x1;
    }
    if (!(right - left >= 1e-300)) detail::slice_fail("slice_sample_1d: shrinkage interval collapsed");
  }
}

}  // namespace countlink
