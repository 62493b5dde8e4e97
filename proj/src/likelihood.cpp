#include "countlink/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countlink {

void SmoothingScheme::validate() const {
  if (!(alpha_dcm > 0)) throw std::invalid_argument("SmoothingScheme: alpha_dcm must be positive");
  if (k_seen < 1) throw std::invalid_argument("SmoothingScheme: k_seen must be at least 1");
}

SmoothingScheme SmoothingScheme::from_training(const CountMatrix& train, double alpha_dcm) {
  SmoothingScheme s{alpha_dcm, std::max<std::size_t>(1, train.nonzero_cells())};
  s.validate();
  return s;
}

DcmParams dcm_alphas(const LatentState& state, const SmoothingScheme& smoothing,
                     std::span<const Cell> cells) {
  if (cells.empty()) throw std::invalid_argument("dcm_alphas: empty cell list");
  smoothing.validate();
  DcmParams params;
  params.alphas = pmf_matrix(state, cells);
  const double s = smoothing.per_cell();
  for (double& a : params.alphas) {
    a += s;
    params.total_alpha += a;
  }
  return params;
}

double dcm_log_prob(std::span<const double> counts, const DcmParams& params) {
  if (counts.size() != params.alphas.size()) {
    throw std::invalid_argument("dcm_log_prob: counts and alphas differ in length");
  }
  double total = 0.0;
  double cell_terms = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double n = counts[c];
    if (!(n >= 0.0)) throw std::invalid_argument("dcm_log_prob: negative count");
    if (!(params.alphas[c] > 0.0)) throw std::invalid_argument("dcm_log_prob: alpha must be positive");
    if (n == 0.0) continue;
    total += n;
    cell_terms += std::lgamma(n + params.alphas[c]) - std::lgamma(params.alphas[c]);
  }
  if (total == 0.0) return 0.0;
  return std::lgamma(params.total_alpha) - std::lgamma(total + params.total_alpha) + cell_terms;
}

double data_log_likelihood(const CountMatrix& data, const LatentState& state,
                           const SmoothingScheme& smoothing,
                           std::span<const std::uint8_t> active) {
  const std::size_t n = data.n_nodes();
  if (state.n_nodes() != n) {
    throw std::invalid_argument("data_log_likelihood: state and data disagree on node count");
  }
  if (!active.empty() && active.size() != n) {
    throw std::invalid_argument("data_log_likelihood: active mask has wrong length");
  }
  smoothing.validate();
  const auto is_active = [&](std::size_t v) { return active.empty() || active[v] != 0; };

  double total = 0.0;
  for (const auto& [cell, count] : data.entries()) {
    if (count > 0.0 && is_active(cell.row) && is_active(cell.col)) total += count;
  }
  if (total == 0.0) return 0.0;

  const Eigen::MatrixXd wz = state.w * state.z;
  const auto bil = [&](std::size_t i, std::size_t j) {
    return state.z.col(static_cast<Eigen::Index>(i)).dot(wz.col(static_cast<Eigen::Index>(j)));
  };

  const double s = smoothing.per_cell();
  double mass = 0.0;
  std::size_t universe = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_active(i)) continue;
    for (std::size_t j = data.symmetric() ? i : 0; j < n; ++j) {
      if (!is_active(j)) continue;
      mass += softplus(bil(i, j));
      ++universe;
    }
  }
  const double total_alpha = mass + static_cast<double>(universe) * s;

  double cell_terms = 0.0;
  for (const auto& [cell, count] : data.entries()) {
    if (count == 0.0 || !is_active(cell.row) || !is_active(cell.col)) continue;
    const double alpha = softplus(bil(cell.row, cell.col)) + s;
    cell_terms += std::lgamma(count + alpha) - std::lgamma(alpha);
  }
  return std::lgamma(total_alpha) - std::lgamma(total + total_alpha) + cell_terms;
}

std::vector<double> predictive_probs(std::span<const Sample> samples,
                                     const SmoothingScheme& smoothing,
                                     std::span<const Cell> queries,
                                     std::span<const Cell> universe) {
  if (samples.empty()) throw std::invalid_argument("predictive_prob: no samples");
  if (universe.empty()) throw std::invalid_argument("predictive_prob: empty universe");
  smoothing.validate();
  const double s = smoothing.per_cell();
  std::vector<double> mean(queries.size(), 0.0);
  for (const Sample& sample : samples) {
    const LatentState& st = sample.state;
    const Eigen::MatrixXd wz = st.w * st.z;
    const auto alpha = [&](const Cell& c) {
      if (c.row >= st.n_nodes() || c.col >= st.n_nodes()) {
        throw std::out_of_range("predictive_prob: node index out of range");
      }
      return softplus(
                 st.z.col(static_cast<Eigen::Index>(c.row)).dot(wz.col(static_cast<Eigen::Index>(c.col)))) +
             s;
    };
    double total_alpha = 0.0;
    for (const Cell& c : universe) total_alpha += alpha(c);
    for (std::size_t q = 0; q < queries.size(); ++q) mean[q] += alpha(queries[q]) / total_alpha;
  }
  for (double& m : mean) m /= static_cast<double>(samples.size());
  return mean;
}

double predictive_prob(std::span<const Sample> samples, const SmoothingScheme& smoothing,
                       std::size_t i, std::size_t j, std::span<const Cell> universe) {
  const Cell target{i, j};
  if (std::find(universe.begin(), universe.end(), target) == universe.end()) {
    throw std::invalid_argument("predictive_prob: cell not in universe");
  }
  return predictive_probs(samples, smoothing, std::span<const Cell>(&target, 1), universe)[0];
}

}  // namespace countlink
