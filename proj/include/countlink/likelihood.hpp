#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "countlink/count_matrix.hpp"
#include "countlink/model.hpp"
#include "countlink/sample.hpp"

namespace countlink {

// Symmetric Dirichlet pseudo-count alpha_dcm / k_seen added to every cell.
struct SmoothingScheme {
  double alpha_dcm = 1.0;
  std::size_t k_seen = 1;

  double per_cell() const { return alpha_dcm / static_cast<double>(k_seen); }
  void validate() const;

  // k_seen = number of distinct nonzero cells in the training mask (at least 1).
  static SmoothingScheme from_training(const CountMatrix& train, double alpha_dcm);
};

struct DcmParams {
  std::vector<double> alphas;
  double total_alpha = 0.0;
};

DcmParams dcm_alphas(const LatentState& state, const SmoothingScheme& smoothing,
                     std::span<const Cell> cells);

// log Gamma(A) - log Gamma(N + A) + sum_c [log Gamma(n_c + a_c) - log Gamma(a_c)].
// The multinomial coefficient is not included. Counts may be real-valued.
double dcm_log_prob(std::span<const double> counts, const DcmParams& params);

// DCM log-likelihood of the observed cells. Normalization mass A runs over the
// whole cell universe (restricted to `active` nodes when given); only masked
// cells contribute counts.
double data_log_likelihood(const CountMatrix& data, const LatentState& state,
                           const SmoothingScheme& smoothing,
                           std::span<const std::uint8_t> active = {});

// Posterior-predictive probability of cell (i, j): the mean over samples of
// alpha_(i,j) / A.
double predictive_prob(std::span<const Sample> samples, const SmoothingScheme& smoothing,
                       std::size_t i, std::size_t j, std::span<const Cell> universe);

// Batched form of predictive_prob for many query cells.
std::vector<double> predictive_probs(std::span<const Sample> samples,
                                     const SmoothingScheme& smoothing,
                                     std::span<const Cell> queries,
                                     std::span<const Cell> universe);

}  // namespace countlink
