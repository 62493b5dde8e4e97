#include "countlink/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace countlink {

CrpState CrpState::from_assignments(std::vector<std::size_t> assignments, double concentration) {
  CrpState s;
  s.concentration = concentration;
  for (std::size_t k : assignments) {
    if (k >= s.class_sizes.size()) s.class_sizes.resize(k + 1, 0);
    ++s.class_sizes[k];
  }
  s.assignments = std::move(assignments);
  s.validate();
  return s;
}

void CrpState::validate() const {
  if (!(concentration > 0)) throw std::invalid_argument("CrpState: concentration must be positive");
  if (assignments.empty()) throw std::invalid_argument("CrpState: no customers");
  std::vector<std::size_t> sizes(class_sizes.size(), 0);
  for (std::size_t k : assignments) {
    if (k >= sizes.size()) throw std::invalid_argument("CrpState: class index out of range");
    ++sizes[k];
  }
  if (sizes != class_sizes) throw std::invalid_argument("CrpState: class sizes inconsistent");
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw std::invalid_argument("CrpState: empty class");
  }
}

std::vector<double> crp_seating_probs(const CrpState& state, std::size_t excluding) {
  if (excluding >= state.assignments.size()) {
    throw std::out_of_range("crp_seating_probs: node index out of range");
  }
  const double others = static_cast<double>(state.assignments.size() - 1);
  const double denom = others + state.concentration;
  std::vector<double> probs;
  probs.reserve(state.class_sizes.size() + 1);
  for (std::size_t k = 0; k < state.class_sizes.size(); ++k) {
    const std::size_t size = state.class_sizes[k] - (state.assignments[excluding] == k ? 1 : 0);
    if (size > 0) probs.push_back(static_cast<double>(size) / denom);
  }
  probs.push_back(state.concentration / denom);
  return probs;
}

double crp_log_prob(const CrpState& state) {
  state.validate();
  const double alpha = state.concentration;
  double lp = static_cast<double>(state.class_sizes.size()) * std::log(alpha);
  for (std::size_t m : state.class_sizes) lp += std::lgamma(static_cast<double>(m));
  for (std::size_t t = 0; t < state.assignments.size(); ++t) {
    lp -= std::log(static_cast<double>(t) + alpha);
  }
  return lp;
}

std::vector<std::size_t> canonical_labels(std::span<const std::size_t> assignments) {
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> relabel;
  std::vector<std::size_t> out;
  out.reserve(assignments.size());
  std::size_t next = 0;
  for (std::size_t k : assignments) {
    if (k >= relabel.size()) relabel.resize(k + 1, unset);
    if (relabel[k] == unset) relabel[k] = next++;
    out.push_back(relabel[k]);
  }
  return out;
}

namespace {

double gaussian_log_density(const double* x, std::size_t count, double sigma_sq) {
  if (!(sigma_sq > 0)) throw std::invalid_argument("Gaussian prior: variance must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(x[i])) throw std::invalid_argument("Gaussian prior: non-finite entry");
    sq += x[i] * x[i];
  }
  return -0.5 * static_cast<double>(count) * std::log(2.0 * std::numbers::pi * sigma_sq) -
         sq / (2.0 * sigma_sq);
}

}  // namespace

double gaussian_log_prior_z(std::span<const double> z_column, double sigma_z_sq) {
  return gaussian_log_density(z_column.data(), z_column.size(), sigma_z_sq);
}

double gaussian_log_prior_w(const Eigen::MatrixXd& w, double sigma_w_sq) {
  return gaussian_log_density(w.data(), static_cast<std::size_t>(w.size()), sigma_w_sq);
}

}  // namespace countlink
