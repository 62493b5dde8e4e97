#include "countlink/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace countlink {

const char* to_string(PriorKind kind) { return kind == PriorKind::Crp ? "crp" : "gaussian"; }

PriorKind parse_prior_kind(std::string_view text) {
  if (text == "crp") return PriorKind::Crp;
  if (text == "gaussian") return PriorKind::Gaussian;
  throw std::invalid_argument("unknown prior kind '" + std::string(text) + "'");
}

LatentState LatentState::gaussian(Eigen::MatrixXd z, Eigen::MatrixXd w) {
  LatentState s;
  s.z = std::move(z);
  s.w = std::move(w);
  s.prior = PriorKind::Gaussian;
  s.validate();
  return s;
}

LatentState LatentState::crp(std::vector<std::size_t> assignments, Eigen::MatrixXd w) {
  LatentState s;
  s.prior = PriorKind::Crp;
  s.w = std::move(w);
  s.z = Eigen::MatrixXd::Zero(s.w.rows(), static_cast<Eigen::Index>(assignments.size()));
  for (std::size_t a = 0; a < assignments.size(); ++a) {
    if (assignments[a] >= s.dims()) {
      throw std::invalid_argument("LatentState: class index exceeds weight matrix size");
    }
    s.z(static_cast<Eigen::Index>(assignments[a]), static_cast<Eigen::Index>(a)) = 1.0;
  }
  s.assignments = std::move(assignments);
  s.validate();
  return s;
}

void LatentState::validate() const {
  if (w.rows() < 1 || w.rows() != w.cols()) {
    throw std::invalid_argument("LatentState: W must be square with d >= 1");
  }
  if (z.rows() != w.rows() || z.cols() < 1) {
    throw std::invalid_argument("LatentState: Z must be d x n with n >= 1");
  }
  if (!z.allFinite() || !w.allFinite()) {
    throw std::invalid_argument("LatentState: non-finite entry");
  }
  if (prior == PriorKind::Gaussian) {
    if (!assignments.empty()) throw std::invalid_argument("LatentState: Gaussian state with classes");
    return;
  }
  if (assignments.size() != n_nodes()) {
    throw std::invalid_argument("LatentState: assignment count does not match n");
  }
  std::vector<std::size_t> sizes(dims(), 0);
  for (std::size_t a = 0; a < assignments.size(); ++a) {
    const std::size_t k = assignments[a];
    if (k >= dims()) throw std::invalid_argument("LatentState: class index out of range");
    ++sizes[k];
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const double expected = static_cast<std::size_t>(r) == k ? 1.0 : 0.0;
      if (z(r, static_cast<Eigen::Index>(a)) != expected) {
        throw std::invalid_argument("LatentState: Z column is not 1-of-K coded");
      }
    }
  }
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw std::invalid_argument("LatentState: empty CRP class");
  }
}

bool LatentState::operator==(const LatentState& other) const {
  return prior == other.prior && assignments == other.assignments && z.rows() == other.z.rows() &&
         z.cols() == other.z.cols() && w.rows() == other.w.rows() && z == other.z &&
         w == other.w;
}

void Hyperparams::validate() const {
  if (!(alpha_crp > 0) || !(sigma_z_sq > 0) || !(sigma_w_sq > 0) || !(alpha_dcm > 0)) {
    throw std::invalid_argument("Hyperparams: all scale parameters must be positive");
  }
  if (d_gaussian < 1) throw std::invalid_argument("Hyperparams: d must be at least 1");
  if (mc_new_class_samples < 1) {
    throw std::invalid_argument("Hyperparams: Monte Carlo sample count must be at least 1");
  }
}

double softplus(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("softplus: non-finite input");
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double bilinear(const LatentState& state, std::size_t i, std::size_t j) {
  if (i >= state.n_nodes() || j >= state.n_nodes()) {
    throw std::out_of_range("node index out of range");
  }
  const auto zi = state.z.col(static_cast<Eigen::Index>(i));
  const auto zj = state.z.col(static_cast<Eigen::Index>(j));
  return zi.dot(state.w * zj);
}

double pmf_cell(const LatentState& state, std::size_t i, std::size_t j) {
  return softplus(bilinear(state, i, j));
}

std::vector<double> pmf_matrix(const LatentState& state, std::span<const Cell> cells) {
  std::vector<double> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) out.push_back(pmf_cell(state, c.row, c.col));
  return out;
}

double interaction_prob(const LatentState& state, std::size_t i, std::size_t j,
                        std::span<const Cell> cells) {
  const Cell target{i, j};
  const auto pos = std::find(cells.begin(), cells.end(), target);
  if (pos == cells.end()) throw std::invalid_argument("interaction_prob: cell not in universe");
  const std::vector<double> pmf = pmf_matrix(state, cells);
  double total = 0.0;
  for (double v : pmf) total += v;
  return pmf[static_cast<std::size_t>(pos - cells.begin())] / total;
}

}  // namespace countlink
