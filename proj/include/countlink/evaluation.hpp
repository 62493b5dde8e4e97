#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "countlink/count_matrix.hpp"
#include "countlink/likelihood.hpp"
#include "countlink/sample.hpp"

namespace countlink {

enum class HoldoutScheme { Interactions, NodePairs };

const char* to_string(HoldoutScheme scheme);

struct HoldoutSplit {
  CountMatrix train;
  CountMatrix test;
  HoldoutScheme scheme = HoldoutScheme::Interactions;
  double train_fraction = 0.8;
};

// Binomial thinning of every observed cell; train and test keep the full mask.
HoldoutSplit split_interactions(const CountMatrix& data, double fraction, std::uint64_t seed);

// Moves floor((1 - fraction) * |mask|) uniformly chosen observed cells, with
// all their counts, into the test set; they become missing in train.
HoldoutSplit split_pairs(const CountMatrix& data, double fraction, std::uint64_t seed);

// DCM log-likelihood of the test counts restricted to the test cells, under
// one state.
double sample_test_log_likelihood(const LatentState& state, const CountMatrix& test,
                                  const SmoothingScheme& smoothing);

// log of the sample-average test likelihood.
double test_log_likelihood(std::span<const Sample> samples, const CountMatrix& test,
                           const SmoothingScheme& smoothing);

struct KendallResult {
  double tau = 0.0;
  double p_value = 1.0;
};

// Tau-b with a two-sided p-value from the tie-corrected normal approximation.
// O(n log n). Throws when either vector is constant.
KendallResult kendall_tau(std::span<const double> x, std::span<const double> y);

// Sample distance correlation (double-centered distance matrices); 0 when
// either vector is constant.
double distance_correlation(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  double test_log_lik = 0.0;
  double kendall_tau = 0.0;
  double tau_p_value = 1.0;
  double dcor = 0.0;
  double sec_per_sample = 0.0;
  double mean_dims = 0.0;
  std::size_t test_cells = 0;
};

// Compares the mean posterior predictive over the test cells against the
// empirical test distribution (test counts normalized over the test cells).
EvalReport evaluate(std::span<const Sample> samples, const HoldoutSplit& split,
                    const SmoothingScheme& smoothing);

}  // namespace countlink
