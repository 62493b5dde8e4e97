#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace countlink {

struct CrpState {
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> class_sizes;
  double concentration = 1.0;

  // Derives class sizes; classes must be dense 0..K-1 with none empty.
  static CrpState from_assignments(std::vector<std::size_t> assignments, double concentration);
  void validate() const;
};

// Seating distribution for node `excluding` given everyone else: one entry per
// class still occupied after removing it (in class order), then the new-table
// entry last.
std::vector<double> crp_seating_probs(const CrpState& state, std::size_t excluding);

// Exchangeable partition log-probability:
// K log(alpha) + sum_k log Gamma(m_k) - sum_{t<n} log(t + alpha).
double crp_log_prob(const CrpState& state);

// Relabels classes 0, 1, ... in order of first appearance.
std::vector<std::size_t> canonical_labels(std::span<const std::size_t> assignments);

double gaussian_log_prior_z(std::span<const double> z_column, double sigma_z_sq);
double gaussian_log_prior_w(const Eigen::MatrixXd& w, double sigma_w_sq);

}  // namespace countlink
