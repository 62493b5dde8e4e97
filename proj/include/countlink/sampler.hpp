#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "countlink/count_matrix.hpp"
#include "countlink/likelihood.hpp"
#include "countlink/model.hpp"
#include "countlink/sample.hpp"
#include "countlink/slice.hpp"

namespace countlink {

struct InitSchedule {
  std::size_t batch_size_max = 4;
  std::size_t iterations_per_batch = 2;
  double rescale_factor = 2.0;
  std::size_t initial_nodes = 2;

  void validate() const;
};

struct ChainConfig {
  std::size_t n_samples = 1;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  InitSchedule init;
  PriorKind prior = PriorKind::Gaussian;
  SliceConfig slice;
  // When false the chain starts from a plain prior draw.
  bool sequential_init = true;

  void validate() const;
};

struct StepDiagnostics {
  double train_log_lik = 0.0;
  double log_posterior = 0.0;
  std::size_t dims = 0;
  double seconds = 0.0;
};

// Node mask for restricted (partially activated) updates; empty = all nodes.
using ActiveMask = std::span<const std::uint8_t>;

double log_prior(const LatentState& state, const Hyperparams& hyper);
double log_posterior(const CountMatrix& data, const LatentState& state,
                     const SmoothingScheme& smoothing, const Hyperparams& hyper);

LatentState sample_prior_state(PriorKind prior, std::size_t n_nodes, const Hyperparams& hyper,
                               Rng& rng);

// One slice-sampling sweep over the entries of W in row-major order.
LatentState update_w(LatentState state, const CountMatrix& data, const SmoothingScheme& smoothing,
                     const Hyperparams& hyper, const SliceConfig& cfg, Rng& rng,
                     ActiveMask active = {});

// One slice-sampling sweep over Z, node-major then component.
LatentState update_z_gaussian(LatentState state, const CountMatrix& data,
                              const SmoothingScheme& smoothing, const Hyperparams& hyper,
                              const SliceConfig& cfg, Rng& rng, ActiveMask active = {});

// Monte Carlo estimate of the log-likelihood with `node` moved to a fresh
// class whose W row and column are drawn from the prior; log-mean-exp over
// hyper.mc_new_class_samples draws.
double mc_new_class_log_lik(const LatentState& state, const CountMatrix& data,
                            const SmoothingScheme& smoothing, const Hyperparams& hyper,
                            std::size_t node, Rng& rng);

// One Gibbs sweep over the CRP class assignments.
LatentState update_z_crp(LatentState state, const CountMatrix& data,
                         const SmoothingScheme& smoothing, const Hyperparams& hyper,
                         const SliceConfig& cfg, Rng& rng, ActiveMask active = {});

// Z given W, then W given Z.
std::pair<LatentState, StepDiagnostics> mcmc_step(LatentState state, const CountMatrix& data,
                                                  const SmoothingScheme& smoothing,
                                                  const Hyperparams& hyper,
                                                  const SliceConfig& cfg, Rng& rng,
                                                  ActiveMask active = {});

// Nodes by total interaction count, descending (ties by index).
std::vector<std::size_t> activation_order(const CountMatrix& data);
// Sizes of the activation waves: initial_nodes, then chunks of batch_size_max.
std::vector<std::size_t> activation_waves(std::size_t n_nodes, const InitSchedule& schedule);

// Annealing stages from counts rescaled to a unit minimum back to the
// original; the final stage is an exact copy of `data`.
std::vector<CountMatrix> rescale_schedule(const CountMatrix& data, double factor);

// Called after every initialization step with the active mask and the index
// of the rescale stage in use.
using InitObserver = std::function<void(std::span<const std::uint8_t> active, std::size_t stage,
                                        const LatentState& state)>;

LatentState sequential_initialize(const CountMatrix& data, const SmoothingScheme& smoothing,
                                  const Hyperparams& hyper, const ChainConfig& cfg, Rng& rng,
                                  const InitObserver& observer = {});

// Initialization, burn-in, then n_samples retained draws at the given
// thinning. Reproducible from cfg.seed.
std::vector<Sample> run_chain(const CountMatrix& data, const Hyperparams& hyper,
                              const ChainConfig& cfg);

}  // namespace countlink
