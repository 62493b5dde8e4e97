#include "countlink/slice.hpp"

namespace countlink {

void SliceConfig::validate() const {
  if (!(initial_width > 0)) throw std::invalid_argument("SliceConfig: width must be positive");
  if (max_step_outs < 1) throw std::invalid_argument("SliceConfig: max_step_outs must be >= 1");
}

namespace detail {

double slice_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double slice_exponential(Rng& rng) { return std::exponential_distribution<double>(1.0)(rng); }

void slice_fail(const char* what) { throw std::runtime_error(what); }

}  // namespace detail
}  // namespace countlink
