#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "countlink/count_matrix.hpp"

namespace countlink {

enum class PriorKind { Crp, Gaussian };

const char* to_string(PriorKind kind);
PriorKind parse_prior_kind(std::string_view text);

// Node representations (columns of z) plus the interaction weight matrix.
// Under the CRP prior every column of z is 1-of-K coded and agrees with
// assignments; classes are dense 0..K-1 with none empty.
struct LatentState {
  Eigen::MatrixXd z;  // d x n
  Eigen::MatrixXd w;  // d x d
  PriorKind prior = PriorKind::Gaussian;
  std::vector<std::size_t> assignments;  // CRP only

  static LatentState gaussian(Eigen::MatrixXd z, Eigen::MatrixXd w);
  static LatentState crp(std::vector<std::size_t> assignments, Eigen::MatrixXd w);

  std::size_t dims() const { return static_cast<std::size_t>(w.rows()); }
  std::size_t n_nodes() const { return static_cast<std::size_t>(z.cols()); }

  // Throws std::invalid_argument on any broken invariant.
  void validate() const;

  bool operator==(const LatentState& other) const;
};

struct Hyperparams {
  double alpha_crp = 1.0;
  double sigma_z_sq = 1.0;
  double sigma_w_sq = 1.0;
  double alpha_dcm = 1.0;
  std::size_t d_gaussian = 6;
  std::size_t mc_new_class_samples = 10;

  void validate() const;
};

// log(1 + exp(x)); throws std::invalid_argument for non-finite x.
double softplus(double x);

double bilinear(const LatentState& state, std::size_t i, std::size_t j);

// softplus(Z_i^T W Z_j)
double pmf_cell(const LatentState& state, std::size_t i, std::size_t j);

std::vector<double> pmf_matrix(const LatentState& state, std::span<const Cell> cells);

// Unsmoothed P((i,j)) normalized over `cells`.
double interaction_prob(const LatentState& state, std::size_t i, std::size_t j,
                        std::span<const Cell> cells);

}  // namespace countlink
