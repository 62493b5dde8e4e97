#pragma once

#include <cstddef>
#include <cstdint>

#include "countlink/count_matrix.hpp"
#include "countlink/model.hpp"

namespace countlink {

struct SyntheticConfig {
  std::size_t n_nodes = 20;
  std::size_t dims = 2;
  double sigma_z_sq = 1.0;
  double sigma_w_sq = 1.0;
  std::size_t total_draws = 2000;
  bool symmetric = false;
  // Every universe cell is observed (zeros included); otherwise only cells
  // that received at least one draw are in the mask.
  bool full_mask = true;
  // Draw the cell probabilities from Dirichlet(pmf) first (the compound
  // model); otherwise they are pmf normalized over the universe.
  bool compound = true;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  LatentState truth;
  CountMatrix counts;
};

// Draws Z and W from their Gaussian priors, then total_draws multinomial
// interactions with probabilities proportional to the pmf over the universe.
SyntheticData generate_gaussian(const SyntheticConfig& cfg);

}  // namespace countlink
