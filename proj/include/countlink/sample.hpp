#pragma once

#include <cstddef>

#include "countlink/model.hpp"

namespace countlink {

// One retained posterior draw plus its chain diagnostics.
struct Sample {
  LatentState state;
  double train_log_lik = 0.0;
  double log_posterior = 0.0;
  double seconds_elapsed = 0.0;
  std::size_t dims = 0;
};

}  // namespace countlink
