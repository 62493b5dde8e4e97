#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "countlink/count_matrix.hpp"
#include "countlink/likelihood.hpp"
#include "countlink/model.hpp"
#include "countlink/simd/kernels.hpp"

namespace countlink {

// Incremental evaluator of data_log_likelihood for single-node and
// single-weight moves. Holds the bilinear values Z_i^T W Z_j and their
// softplus for every universe cell, the projections P = W Z and Q = W^T Z,
// and the per-cell log-Gamma terms of the observed cells. A move touching one
// node costs O(n d); a move touching one weight costs O(|universe|).
//
// rebuild() recomputes everything from the state; incremental results agree
// with data_log_likelihood to within 1e-9.
class BilinearCache {
 public:
  BilinearCache(const CountMatrix& data, const SmoothingScheme& smoothing,
                std::span<const std::uint8_t> active = {});

  void rebuild(const LatentState& state);
  double log_lik() const { return assemble(mass_, cell_terms_); }

  std::size_t n_nodes() const { return n_; }
  std::size_t universe_size() const { return ucells_.size(); }
  bool active(std::size_t node) const { return active_[node] != 0; }
  // Projections W Z and W^T Z for the state last passed to rebuild/commit.
  const Eigen::MatrixXd& proj_wz() const { return wz_; }
  const Eigen::MatrixXd& proj_wtz() const { return wtz_; }

  // --- single-node moves -------------------------------------------------
  // Removes node a's incident cells from the running sums. Must precede any
  // node evaluation or commit for a.
  void begin_node(std::size_t a);

  // Log-likelihood with node a's incident bilinear values replaced by
  // value(cell); the cell is (a, b), (b, a) or (a, a).
  template <class ValueFn>
  double node_log_lik(ValueFn&& value);

  // Gaussian fast path: coordinate k of node a shifted by delta.
  void prepare_coordinate(const LatentState& state, std::size_t k);
  double coordinate_log_lik(double delta);
  // state.z(k, a) must already hold the accepted value.
  void commit_coordinate(const LatentState& state, double delta);

  // Recomputes node a's cells from the state (any prior, any W size). W and
  // every other column of Z must match the last rebuild except for the
  // class rows added or removed while a was unseated.
  void commit_node(const LatentState& state);

  // --- single-weight moves -----------------------------------------------
  void begin_weight(const LatentState& state, std::size_t k, std::size_t l);
  double weight_log_lik(double delta);
  // state.w(k, l) must already hold the accepted value.
  void commit_weight(double delta);

  // Recomputes W Z and W^T Z (after W changes shape).
  void rebuild_projections(const LatentState& state);

 private:
  struct Incident {
    std::uint32_t u;      // compact universe index
    std::uint32_t other;  // the other endpoint
    bool row;             // cell is (a, other), else (other, a)
  };
  struct ObsIncident {
    std::uint32_t obs;
    std::uint32_t other;
    bool row;
    bool self;
  };

  double assemble(double mass, double cell_terms) const;
  double obs_term(std::size_t obs, double bilinear) const;
  static double sp(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

  std::size_t n_ = 0;
  bool symmetric_ = false;
  double smooth_ = 0.0;
  std::vector<std::uint8_t> active_;

  // Universe cells (active endpoints only), in row-major order.
  std::vector<Cell> ucells_;
  std::vector<std::int64_t> flat_to_u_;  // n*n -> compact index or -1
  std::vector<double> bil_;              // per universe cell
  std::vector<double> soft_;             // softplus(bil_)

  // Observed cells with nonzero count and active endpoints.
  std::vector<std::uint32_t> obs_u_;
  std::vector<double> obs_count_;
  std::vector<double> obs_term_;
  std::vector<std::vector<std::uint32_t>> obs_by_node_;
  double total_count_ = 0.0;

  Eigen::MatrixXd wz_;
  Eigen::MatrixXd wtz_;

  double mass_ = 0.0;        // sum of softplus over the universe
  double cell_terms_ = 0.0;  // sum of obs_term_

  // Current node frame.
  std::size_t node_ = 0;
  std::int64_t self_u_ = -1;
  std::vector<Incident> incident_;
  std::vector<ObsIncident> obs_incident_;
  double mass_without_ = 0.0;
  double terms_without_ = 0.0;

  // Scratch for vector kernels.
  std::vector<double> base_;
  std::vector<double> coef_;
  std::vector<double> vals_;
  std::vector<double> obs_base_;
  std::vector<double> obs_coef_;
  double self_base_ = 0.0;
  double self_lin_ = 0.0;
  double self_quad_ = 0.0;
  std::size_t coord_ = 0;

  // Current weight frame.
  std::vector<double> wcoef_;
  std::vector<double> wobs_coef_;
  std::vector<double> zrow_k_;  // for W^T Z
  std::vector<double> zrow_l_;  // for W Z
  std::size_t wk_ = 0;
  std::size_t wl_ = 0;
};

template <class ValueFn>
double BilinearCache::node_log_lik(ValueFn&& value) {
  vals_.resize(incident_.size());
  for (std::size_t t = 0; t < incident_.size(); ++t) {
    const Incident& inc = incident_[t];
    vals_[t] = inc.row ? value(Cell{node_, inc.other}) : value(Cell{inc.other, node_});
  }
  double mass = mass_without_ + simd::softplus_sum(vals_);
  if (self_u_ >= 0) mass += sp(value(Cell{node_, node_}));
  double terms = terms_without_;
  for (const ObsIncident& o : obs_incident_) {
    const Cell c = o.self ? Cell{node_, node_}
                          : (o.row ? Cell{node_, o.other} : Cell{o.other, node_});
    terms += obs_term(o.obs, value(c));
  }
  return assemble(mass, terms);
}

}  // namespace countlink
