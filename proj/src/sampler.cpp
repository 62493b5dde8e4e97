#include "countlink/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "countlink/bilinear_cache.hpp"
#include "countlink/priors.hpp"

namespace countlink {

void InitSchedule::validate() const {
  if (batch_size_max < 1) throw std::invalid_argument("InitSchedule: batch size must be >= 1");
  if (iterations_per_batch < 1) {
    throw std::invalid_argument("InitSchedule: iterations per batch must be >= 1");
  }
  if (!(rescale_factor > 1.0)) throw std::invalid_argument("InitSchedule: rescale factor must exceed 1");
  if (initial_nodes < 2) throw std::invalid_argument("InitSchedule: initial nodes must be >= 2");
}

void ChainConfig::validate() const {
  if (n_samples < 1) throw std::invalid_argument("ChainConfig: n_samples must be >= 1");
  if (thin < 1) throw std::invalid_argument("ChainConfig: thin must be >= 1");
  init.validate();
  slice.validate();
}

namespace {

double normal(Rng& rng, double variance) {
  return std::normal_distribution<double>(0.0, std::sqrt(variance))(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double log_prior_1d(double x, double variance) {
  return gaussian_log_prior_z(std::span<const double>(&x, 1), variance);
}

std::vector<std::size_t> class_sizes(const LatentState& state) {
  std::vector<std::size_t> sizes(state.dims(), 0);
  for (std::size_t k : state.assignments) ++sizes[k];
  return sizes;
}

void remove_class(LatentState& state, std::size_t k) {
  const auto d = static_cast<Eigen::Index>(state.dims());
  const auto kk = static_cast<Eigen::Index>(k);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < d; ++r) {
    if (r != kk) keep.push_back(r);
  }
  state.w = state.w(keep, keep).eval();
  state.z = state.z(keep, Eigen::all).eval();
  for (std::size_t& c : state.assignments) {
    if (c > k) --c;
  }
}

void append_class(LatentState& state, const Eigen::VectorXd& row, const Eigen::VectorXd& col,
                  double corner) {
  const auto d = static_cast<Eigen::Index>(state.dims());
  Eigen::MatrixXd w(d + 1, d + 1);
  w.topLeftCorner(d, d) = state.w;
  w.block(d, 0, 1, d) = row.transpose();
  w.block(0, d, d, 1) = col;
  w(d, d) = corner;
  state.w = std::move(w);
  state.z.conservativeResize(d + 1, Eigen::NoChange);
  state.z.row(d).setZero();
}

struct FreshClass {
  Eigen::VectorXd row;
  Eigen::VectorXd col;
  double corner = 0.0;
};

FreshClass draw_fresh_class(std::size_t dims, double sigma_w_sq, Rng& rng) {
  FreshClass f;
  f.row.resize(static_cast<Eigen::Index>(dims));
  f.col.resize(static_cast<Eigen::Index>(dims));
  for (Eigen::Index i = 0; i < f.row.size(); ++i) f.row(i) = normal(rng, sigma_w_sq);
  for (Eigen::Index i = 0; i < f.col.size(); ++i) f.col(i) = normal(rng, sigma_w_sq);
  f.corner = normal(rng, sigma_w_sq);
  return f;
}

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

// Node `node` must be unseated in `state` (Z column zero) and cache.begin_node
// must have been called for it.
double fresh_class_log_lik(const LatentState& state, BilinearCache& cache,
                           const Hyperparams& hyper, std::size_t node, Rng& rng,
                           std::vector<double>& scratch) {
  const std::size_t m = hyper.mc_new_class_samples;
  if (m < 1) throw std::invalid_argument("mc_new_class_log_lik: sample count must be >= 1");
  scratch.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    const FreshClass f = draw_fresh_class(state.dims(), hyper.sigma_w_sq, rng);
    scratch[s] = cache.node_log_lik([&](const Cell& c) {
      if (c.row == node && c.col == node) return f.corner;
      if (c.row == node) return f.row.dot(state.z.col(static_cast<Eigen::Index>(c.col)));
      return state.z.col(static_cast<Eigen::Index>(c.row)).dot(f.col);
    });
  }
  return log_sum_exp(scratch) - std::log(static_cast<double>(m));
}

// Takes node out of its class, dropping the class if it empties.
void unseat(LatentState& state, std::vector<std::size_t>& sizes, std::size_t node,
            BilinearCache& cache) {
  const std::size_t old = state.assignments[node];
  state.z(static_cast<Eigen::Index>(old), static_cast<Eigen::Index>(node)) = 0.0;
  if (--sizes[old] == 0) {
    remove_class(state, old);
    sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(old));
    cache.rebuild_projections(state);
  }
}

void canonicalize(LatentState& state) {
  const std::vector<std::size_t> relabeled = canonical_labels(state.assignments);
  if (relabeled == state.assignments) return;
  const auto d = static_cast<Eigen::Index>(state.dims());
  std::vector<Eigen::Index> old_of_new(static_cast<std::size_t>(d));
  for (std::size_t a = 0; a < relabeled.size(); ++a) {
    old_of_new[relabeled[a]] = static_cast<Eigen::Index>(state.assignments[a]);
  }
  state.w = state.w(old_of_new, old_of_new).eval();
  state.z = state.z(old_of_new, Eigen::all).eval();
  state.assignments = relabeled;
}

void sweep_w(LatentState& state, BilinearCache& cache, const Hyperparams& hyper,
             const SliceConfig& cfg, Rng& rng) {
  const std::size_t d = state.dims();
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = 0; l < d; ++l) {
      const auto kk = static_cast<Eigen::Index>(k);
      const auto ll = static_cast<Eigen::Index>(l);
      cache.begin_weight(state, k, l);
      const double x0 = state.w(kk, ll);
      const double x1 = slice_sample_1d(
          [&](double x) { return cache.weight_log_lik(x - x0) + log_prior_1d(x, hyper.sigma_w_sq); },
          x0, cfg, rng);
      state.w(kk, ll) = x1;
      cache.commit_weight(x1 - x0);
    }
  }
}

void sweep_z_gaussian(LatentState& state, BilinearCache& cache, const Hyperparams& hyper,
                      const SliceConfig& cfg, Rng& rng) {
  const std::size_t d = state.dims();
  for (std::size_t a = 0; a < state.n_nodes(); ++a) {
    if (!cache.active(a)) continue;
    cache.begin_node(a);
    for (std::size_t k = 0; k < d; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const auto aa = static_cast<Eigen::Index>(a);
      cache.prepare_coordinate(state, k);
      const double x0 = state.z(kk, aa);
      const double x1 = slice_sample_1d(
          [&](double x) {
            return cache.coordinate_log_lik(x - x0) + log_prior_1d(x, hyper.sigma_z_sq);
          },
          x0, cfg, rng);
      state.z(kk, aa) = x1;
      cache.commit_coordinate(state, x1 - x0);
    }
  }
}

void sweep_z_crp(LatentState& state, BilinearCache& cache, const Hyperparams& hyper, Rng& rng) {
  std::vector<std::size_t> sizes = class_sizes(state);
  std::vector<double> log_weights;
  std::vector<double> scratch;
  for (std::size_t a = 0; a < state.n_nodes(); ++a) {
    if (!cache.active(a)) continue;
    unseat(state, sizes, a, cache);
    cache.begin_node(a);

    const std::size_t classes = sizes.size();
    const Eigen::MatrixXd& wz = cache.proj_wz();
    const Eigen::MatrixXd& wtz = cache.proj_wtz();
    log_weights.assign(classes + 1, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double ll = cache.node_log_lik([&](const Cell& c) {
        if (c.row == a && c.col == a) return state.w(kk, kk);
        if (c.row == a) return wz(kk, static_cast<Eigen::Index>(c.col));
        return wtz(kk, static_cast<Eigen::Index>(c.row));
      });
      log_weights[k] = std::log(static_cast<double>(sizes[k])) + ll;
    }
    log_weights[classes] =
        std::log(hyper.alpha_crp) + fresh_class_log_lik(state, cache, hyper, a, rng, scratch);

    const double norm = log_sum_exp(log_weights);
    double u = uniform01(rng);
    std::size_t choice = classes;
    for (std::size_t k = 0; k <= classes; ++k) {
      u -= std::exp(log_weights[k] - norm);
      if (u < 0.0) {
        choice = k;
        break;
      }
    }

    if (choice == classes) {
      const FreshClass f = draw_fresh_class(classes, hyper.sigma_w_sq, rng);
      append_class(state, f.row, f.col, f.corner);
      sizes.push_back(0);
    }
    state.assignments[a] = choice;
    state.z(static_cast<Eigen::Index>(choice), static_cast<Eigen::Index>(a)) = 1.0;
    ++sizes[choice];
    cache.commit_node(state);
  }
  canonicalize(state);
}

void check_inputs(const LatentState& state, const CountMatrix& data) {
  state.validate();
  if (state.n_nodes() != data.n_nodes()) {
    throw std::invalid_argument("sampler: state and data disagree on node count");
  }
}

void z_phase(LatentState& state, BilinearCache& cache, const Hyperparams& hyper,
             const SliceConfig& cfg, Rng& rng) {
  cache.rebuild(state);
  if (state.prior == PriorKind::Gaussian) {
    sweep_z_gaussian(state, cache, hyper, cfg, rng);
  } else {
    sweep_z_crp(state, cache, hyper, rng);
  }
}

}  // namespace

double log_prior(const LatentState& state, const Hyperparams& hyper) {
  double lp = gaussian_log_prior_w(state.w, hyper.sigma_w_sq);
  if (state.prior == PriorKind::Gaussian) {
    lp += gaussian_log_prior_w(state.z, hyper.sigma_z_sq);
  } else {
    lp += crp_log_prob(CrpState::from_assignments(state.assignments, hyper.alpha_crp));
  }
  return lp;
}

double log_posterior(const CountMatrix& data, const LatentState& state,
                     const SmoothingScheme& smoothing, const Hyperparams& hyper) {
  return data_log_likelihood(data, state, smoothing) + log_prior(state, hyper);
}

LatentState sample_prior_state(PriorKind prior, std::size_t n_nodes, const Hyperparams& hyper,
                               Rng& rng) {
  hyper.validate();
  if (n_nodes < 1) throw std::invalid_argument("sample_prior_state: need at least one node");
  if (prior == PriorKind::Gaussian) {
    const auto d = static_cast<Eigen::Index>(hyper.d_gaussian);
    Eigen::MatrixXd z(d, static_cast<Eigen::Index>(n_nodes));
    for (Eigen::Index a = 0; a < z.cols(); ++a) {
      for (Eigen::Index k = 0; k < d; ++k) z(k, a) = normal(rng, hyper.sigma_z_sq);
    }
    Eigen::MatrixXd w(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index l = 0; l < d; ++l) w(k, l) = normal(rng, hyper.sigma_w_sq);
    }
    return LatentState::gaussian(std::move(z), std::move(w));
  }
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> sizes;
  for (std::size_t t = 0; t < n_nodes; ++t) {
    double u = uniform01(rng) * (static_cast<double>(t) + hyper.alpha_crp);
    std::size_t choice = sizes.size();
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      u -= static_cast<double>(sizes[k]);
      if (u < 0.0) {
        choice = k;
        break;
      }
    }
    if (choice == sizes.size()) sizes.push_back(0);
    ++sizes[choice];
    assignments.push_back(choice);
  }
  const auto d = static_cast<Eigen::Index>(sizes.size());
  Eigen::MatrixXd w(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = 0; l < d; ++l) w(k, l) = normal(rng, hyper.sigma_w_sq);
  }
  return LatentState::crp(std::move(assignments), std::move(w));
}

LatentState update_w(LatentState state, const CountMatrix& data, const SmoothingScheme& smoothing,
                     const Hyperparams& hyper, const SliceConfig& cfg, Rng& rng,
                     ActiveMask active) {
  check_inputs(state, data);
  BilinearCache cache(data, smoothing, active);
  cache.rebuild(state);
  sweep_w(state, cache, hyper, cfg, rng);
  return state;
}

LatentState update_z_gaussian(LatentState state, const CountMatrix& data,
                              const SmoothingScheme& smoothing, const Hyperparams& hyper,
                              const SliceConfig& cfg, Rng& rng, ActiveMask active) {
  check_inputs(state, data);
  if (state.prior != PriorKind::Gaussian) {
    throw std::invalid_argument("update_z_gaussian: state uses the CRP prior");
  }
  BilinearCache cache(data, smoothing, active);
  cache.rebuild(state);
  sweep_z_gaussian(state, cache, hyper, cfg, rng);
  return state;
}

double mc_new_class_log_lik(const LatentState& state, const CountMatrix& data,
                            const SmoothingScheme& smoothing, const Hyperparams& hyper,
                            std::size_t node, Rng& rng) {
  check_inputs(state, data);
  if (state.prior != PriorKind::Crp) {
    throw std::invalid_argument("mc_new_class_log_lik: state uses the Gaussian prior");
  }
  if (hyper.mc_new_class_samples < 1) {
    throw std::invalid_argument("mc_new_class_log_lik: sample count must be >= 1");
  }
  if (node >= state.n_nodes()) throw std::out_of_range("mc_new_class_log_lik: node out of range");
  LatentState work = state;
  BilinearCache cache(data, smoothing);
  cache.rebuild(work);
  std::vector<std::size_t> sizes = class_sizes(work);
  unseat(work, sizes, node, cache);
  cache.begin_node(node);
  std::vector<double> scratch;
  return fresh_class_log_lik(work, cache, hyper, node, rng, scratch);
}

LatentState update_z_crp(LatentState state, const CountMatrix& data,
                         const SmoothingScheme& smoothing, const Hyperparams& hyper,
                         const SliceConfig& /*cfg*/, Rng& rng, ActiveMask active) {
  check_inputs(state, data);
  if (state.prior != PriorKind::Crp) {
    throw std::invalid_argument("update_z_crp: state uses the Gaussian prior");
  }
  BilinearCache cache(data, smoothing, active);
  cache.rebuild(state);
  sweep_z_crp(state, cache, hyper, rng);
  return state;
}

std::pair<LatentState, StepDiagnostics> mcmc_step(LatentState state, const CountMatrix& data,
                                                  const SmoothingScheme& smoothing,
                                                  const Hyperparams& hyper,
                                                  const SliceConfig& cfg, Rng& rng,
                                                  ActiveMask active) {
  const auto start = std::chrono::steady_clock::now();
  check_inputs(state, data);
  hyper.validate();
  cfg.validate();
  BilinearCache cache(data, smoothing, active);
  z_phase(state, cache, hyper, cfg, rng);
  cache.rebuild(state);
  sweep_w(state, cache, hyper, cfg, rng);
  cache.rebuild(state);

  StepDiagnostics diag;
  diag.train_log_lik = cache.log_lik();
  diag.log_posterior = diag.train_log_lik + log_prior(state, hyper);
  diag.dims = state.dims();
  diag.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(state), diag};
}

std::vector<std::size_t> activation_order(const CountMatrix& data) {
  std::vector<double> totals(data.n_nodes(), 0.0);
  for (const auto& [cell, count] : data.entries()) {
    totals[cell.row] += count;
    if (cell.col != cell.row) totals[cell.col] += count;
  }
  std::vector<std::size_t> order(data.n_nodes());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
  return order;
}

std::vector<std::size_t> activation_waves(std::size_t n_nodes, const InitSchedule& schedule) {
  schedule.validate();
  if (n_nodes < 2) throw std::invalid_argument("activation_waves: need at least two nodes");
  std::vector<std::size_t> waves{std::min(schedule.initial_nodes, n_nodes)};
  std::size_t placed = waves.front();
  while (placed < n_nodes) {
    const std::size_t next = std::min(schedule.batch_size_max, n_nodes - placed);
    waves.push_back(next);
    placed += next;
  }
  return waves;
}

std::vector<CountMatrix> rescale_schedule(const CountMatrix& data, double factor) {
  if (!(factor > 1.0)) throw std::invalid_argument("rescale_schedule: factor must exceed 1");
  double min_count = std::numeric_limits<double>::infinity();
  for (const auto& [cell, count] : data.entries()) {
    if (count > 0.0) min_count = std::min(min_count, count);
  }
  if (!std::isfinite(min_count)) throw std::invalid_argument("rescale_schedule: all counts are zero");

  std::size_t steps = 0;
  for (double reach = 1.0; reach < min_count; reach *= factor) ++steps;

  std::vector<CountMatrix> stages;
  stages.reserve(steps + 1);
  double multiplier = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    CountMatrix stage = data;
    for (const auto& [cell, count] : data.entries()) {
      stage.set(cell, std::min(count, count / min_count * multiplier));
    }
    stages.push_back(std::move(stage));
    multiplier *= factor;
  }
  stages.push_back(data);
  return stages;
}

LatentState sequential_initialize(const CountMatrix& data, const SmoothingScheme& smoothing,
                                  const Hyperparams& hyper, const ChainConfig& cfg, Rng& rng,
                                  const InitObserver& observer) {
  cfg.validate();
  const std::size_t n = data.n_nodes();
  if (n < 2) throw std::invalid_argument("sequential_initialize: need at least two nodes");
  LatentState state = sample_prior_state(cfg.prior, n, hyper, rng);
  if (data.nonzero_cells() == 0) return state;

  const std::vector<CountMatrix> stages = rescale_schedule(data, cfg.init.rescale_factor);
  const std::vector<std::size_t> order = activation_order(data);
  const std::vector<std::size_t> waves = activation_waves(n, cfg.init);

  std::vector<std::uint8_t> active(n, 0);
  std::size_t next = 0;
  for (std::size_t wave : waves) {
    for (std::size_t i = 0; i < wave; ++i) active[order[next++]] = 1;
    for (std::size_t it = 0; it < cfg.init.iterations_per_batch; ++it) {
      state = mcmc_step(std::move(state), stages.front(), smoothing, hyper, cfg.slice, rng, active)
                  .first;
      if (observer) observer(active, 0, state);
    }
  }
  for (std::size_t s = 1; s < stages.size(); ++s) {
    for (std::size_t it = 0; it < cfg.init.iterations_per_batch; ++it) {
      state = mcmc_step(std::move(state), stages[s], smoothing, hyper, cfg.slice, rng).first;
      if (observer) observer(active, s, state);
    }
  }
  return state;
}

std::vector<Sample> run_chain(const CountMatrix& data, const Hyperparams& hyper,
                              const ChainConfig& cfg) {
  cfg.validate();
  hyper.validate();
  Rng rng(cfg.seed);
  const SmoothingScheme smoothing = SmoothingScheme::from_training(data, hyper.alpha_dcm);

  LatentState state = cfg.sequential_init && data.n_nodes() >= 2
                          ? sequential_initialize(data, smoothing, hyper, cfg, rng)
                          : sample_prior_state(cfg.prior, data.n_nodes(), hyper, rng);
  for (std::size_t b = 0; b < cfg.burn_in; ++b) {
    state = mcmc_step(std::move(state), data, smoothing, hyper, cfg.slice, rng).first;
  }

  std::vector<Sample> samples;
  samples.reserve(cfg.n_samples);
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    StepDiagnostics diag;
    double seconds = 0.0;
    for (std::size_t t = 0; t < cfg.thin; ++t) {
      auto [next, d] = mcmc_step(std::move(state), data, smoothing, hyper, cfg.slice, rng);
      state = std::move(next);
      diag = d;
      seconds += d.seconds;
    }
    samples.push_back(Sample{state, diag.train_log_lik, diag.log_posterior, seconds, diag.dims});
  }
  return samples;
}

}  // namespace countlink
