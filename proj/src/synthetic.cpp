#include "countlink/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "countlink/slice.hpp"

namespace countlink {

SyntheticData generate_gaussian(const SyntheticConfig& cfg) {
  if (cfg.n_nodes == 0 || cfg.dims == 0) throw std::invalid_argument("synthetic: empty model");
  if (!(cfg.sigma_z_sq > 0.0) || !(cfg.sigma_w_sq > 0.0)) {
    throw std::invalid_argument("synthetic: variances must be positive");
  }
  Rng rng(cfg.seed);
  const auto d = static_cast<Eigen::Index>(cfg.dims);
  const auto n = static_cast<Eigen::Index>(cfg.n_nodes);
  std::normal_distribution<double> zdist(0.0, std::sqrt(cfg.sigma_z_sq));
  std::normal_distribution<double> wdist(0.0, std::sqrt(cfg.sigma_w_sq));
  Eigen::MatrixXd z(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) z(k, j) = zdist(rng);
  }
  Eigen::MatrixXd w(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = 0; l < d; ++l) w(k, l) = wdist(rng);
  }
  SyntheticData out{LatentState::gaussian(std::move(z), std::move(w)),
                    CountMatrix(cfg.n_nodes, cfg.symmetric)};

  const std::vector<Cell> universe = out.counts.universe();
  std::vector<double> weights = pmf_matrix(out.truth, universe);
  if (cfg.compound) {
    for (double& w : weights) w = std::gamma_distribution<double>(w, 1.0)(rng);
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<double> tally(universe.size(), 0.0);
  for (std::size_t t = 0; t < cfg.total_draws; ++t) tally[pick(rng)] += 1.0;

  for (std::size_t u = 0; u < universe.size(); ++u) {
    if (cfg.full_mask || tally[u] > 0.0) out.counts.set(universe[u], tally[u]);
  }
  std::vector<std::string> labels;
  labels.reserve(cfg.n_nodes);
  for (std::size_t i = 0; i < cfg.n_nodes; ++i) labels.push_back("v" + std::to_string(i));
  out.counts.set_labels(std::move(labels));
  return out;
}

}  // namespace countlink
