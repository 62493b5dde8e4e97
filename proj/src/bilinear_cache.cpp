#include "countlink/bilinear_cache.hpp"

#include <stdexcept>

namespace countlink {

BilinearCache::BilinearCache(const CountMatrix& data, const SmoothingScheme& smoothing,
                             std::span<const std::uint8_t> active)
    : n_(data.n_nodes()), symmetric_(data.symmetric()), smooth_(smoothing.per_cell()) {
  smoothing.validate();
  if (!active.empty() && active.size() != n_) {
    throw std::invalid_argument("BilinearCache: active mask has wrong length");
  }
  active_.assign(n_, 1);
  if (!active.empty()) active_.assign(active.begin(), active.end());

  flat_to_u_.assign(n_ * n_, -1);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!active_[i]) continue;
    for (std::size_t j = symmetric_ ? i : 0; j < n_; ++j) {
      if (!active_[j]) continue;
      flat_to_u_[i * n_ + j] = static_cast<std::int64_t>(ucells_.size());
      ucells_.push_back({i, j});
    }
  }

  obs_by_node_.resize(n_);
  for (const auto& [cell, count] : data.entries()) {
    if (count <= 0.0 || !active_[cell.row] || !active_[cell.col]) continue;
    const auto obs = static_cast<std::uint32_t>(obs_u_.size());
    obs_u_.push_back(static_cast<std::uint32_t>(flat_to_u_[cell.row * n_ + cell.col]));
    obs_count_.push_back(count);
    total_count_ += count;
    obs_by_node_[cell.row].push_back(obs);
    if (cell.col != cell.row) obs_by_node_[cell.col].push_back(obs);
  }
  obs_term_.assign(obs_u_.size(), 0.0);
  bil_.assign(ucells_.size(), 0.0);
  soft_.assign(ucells_.size(), 0.0);
}

double BilinearCache::assemble(double mass, double cell_terms) const {
  if (total_count_ == 0.0) return 0.0;
  const double total_alpha = mass + static_cast<double>(ucells_.size()) * smooth_;
  return std::lgamma(total_alpha) - std::lgamma(total_count_ + total_alpha) + cell_terms;
}

double BilinearCache::obs_term(std::size_t obs, double bilinear) const {
  const double alpha = sp(bilinear) + smooth_;
  return std::lgamma(obs_count_[obs] + alpha) - std::lgamma(alpha);
}

void BilinearCache::rebuild_projections(const LatentState& state) {
  wz_ = state.w * state.z;
  wtz_ = state.w.transpose() * state.z;
}

void BilinearCache::rebuild(const LatentState& state) {
  if (state.n_nodes() != n_) throw std::invalid_argument("BilinearCache: node count mismatch");
  rebuild_projections(state);
  for (std::size_t u = 0; u < ucells_.size(); ++u) {
    const Cell& c = ucells_[u];
    bil_[u] = state.z.col(static_cast<Eigen::Index>(c.row))
                  .dot(wz_.col(static_cast<Eigen::Index>(c.col)));
  }
  mass_ = 0.0;
  for (std::size_t u = 0; u < ucells_.size(); ++u) {
    soft_[u] = sp(bil_[u]);
    mass_ += soft_[u];
  }
  cell_terms_ = 0.0;
  for (std::size_t o = 0; o < obs_u_.size(); ++o) {
    obs_term_[o] = obs_term(o, bil_[obs_u_[o]]);
    cell_terms_ += obs_term_[o];
  }
}

void BilinearCache::begin_node(std::size_t a) {
  if (a >= n_) throw std::out_of_range("BilinearCache: node index out of range");
  node_ = a;
  incident_.clear();
  obs_incident_.clear();
  self_u_ = -1;
  mass_without_ = mass_;
  terms_without_ = cell_terms_;
  if (!active_[a]) return;

  for (std::size_t b = 0; b < n_; ++b) {
    if (b == a || !active_[b]) continue;
    const auto other = static_cast<std::uint32_t>(b);
    if (!symmetric_ || b > a) {
      incident_.push_back({static_cast<std::uint32_t>(flat_to_u_[a * n_ + b]), other, true});
    }
    if (!symmetric_ || b < a) {
      incident_.push_back({static_cast<std::uint32_t>(flat_to_u_[b * n_ + a]), other, false});
    }
  }
  self_u_ = flat_to_u_[a * n_ + a];

  double removed = 0.0;
  for (const Incident& inc : incident_) removed += soft_[inc.u];
  removed += soft_[static_cast<std::size_t>(self_u_)];
  mass_without_ = mass_ - removed;

  double removed_terms = 0.0;
  for (std::uint32_t obs : obs_by_node_[a]) {
    const Cell& c = ucells_[obs_u_[obs]];
    const bool self = c.row == a && c.col == a;
    const bool row = c.row == a;
    obs_incident_.push_back(
        {obs, static_cast<std::uint32_t>(row ? c.col : c.row), row, self});
    removed_terms += obs_term_[obs];
  }
  terms_without_ = cell_terms_ - removed_terms;
}

void BilinearCache::prepare_coordinate(const LatentState& state, std::size_t k) {
  const auto kk = static_cast<Eigen::Index>(k);
  const auto aa = static_cast<Eigen::Index>(node_);
  coord_ = k;
  base_.resize(incident_.size());
  coef_.resize(incident_.size());
  for (std::size_t t = 0; t < incident_.size(); ++t) {
    const Incident& inc = incident_[t];
    base_[t] = bil_[inc.u];
    coef_[t] = inc.row ? wz_(kk, inc.other) : wtz_(kk, inc.other);
  }
  if (self_u_ >= 0) {
    self_base_ = bil_[static_cast<std::size_t>(self_u_)];
    self_lin_ = wz_(kk, aa) + wtz_(kk, aa);
    self_quad_ = state.w(kk, kk);
  }
  obs_base_.resize(obs_incident_.size());
  obs_coef_.resize(obs_incident_.size());
  for (std::size_t t = 0; t < obs_incident_.size(); ++t) {
    const ObsIncident& o = obs_incident_[t];
    obs_base_[t] = bil_[obs_u_[o.obs]];
    obs_coef_[t] = o.self ? 0.0 : (o.row ? wz_(kk, o.other) : wtz_(kk, o.other));
  }
}

double BilinearCache::coordinate_log_lik(double delta) {
  if (self_u_ < 0) return assemble(mass_without_, terms_without_);
  const double self_val = self_base_ + delta * (self_lin_ + delta * self_quad_);
  double mass = mass_without_ + simd::softplus_axpy_sum(base_, coef_, delta) + sp(self_val);
  double terms = terms_without_;
  for (std::size_t t = 0; t < obs_incident_.size(); ++t) {
    const double v = obs_incident_[t].self ? self_val : obs_base_[t] + delta * obs_coef_[t];
    terms += obs_term(obs_incident_[t].obs, v);
  }
  return assemble(mass, terms);
}

void BilinearCache::commit_coordinate(const LatentState& state, double delta) {
  const auto aa = static_cast<Eigen::Index>(node_);
  wz_.col(aa) = state.w * state.z.col(aa);
  wtz_.col(aa) = state.w.transpose() * state.z.col(aa);
  if (self_u_ < 0) return;

  vals_.resize(incident_.size());
  simd::softplus_axpy(base_, coef_, delta, vals_);
  double added = 0.0;
  for (std::size_t t = 0; t < incident_.size(); ++t) {
    bil_[incident_[t].u] = base_[t] + delta * coef_[t];
    soft_[incident_[t].u] = vals_[t];
    added += vals_[t];
  }
  const auto su = static_cast<std::size_t>(self_u_);
  bil_[su] = self_base_ + delta * (self_lin_ + delta * self_quad_);
  soft_[su] = sp(bil_[su]);
  added += soft_[su];
  mass_ = mass_without_ + added;

  double terms = 0.0;
  for (const ObsIncident& o : obs_incident_) {
    obs_term_[o.obs] = obs_term(o.obs, bil_[obs_u_[o.obs]]);
    terms += obs_term_[o.obs];
  }
  cell_terms_ = terms_without_ + terms;
}

void BilinearCache::commit_node(const LatentState& state) {
  const auto aa = static_cast<Eigen::Index>(node_);
  if (wz_.rows() != state.w.rows()) {
    rebuild_projections(state);
  } else {
    wz_.col(aa) = state.w * state.z.col(aa);
    wtz_.col(aa) = state.w.transpose() * state.z.col(aa);
  }
  if (self_u_ < 0) return;

  const auto za = state.z.col(aa);
  double added = 0.0;
  for (const Incident& inc : incident_) {
    const auto other = static_cast<Eigen::Index>(inc.other);
    bil_[inc.u] = inc.row ? za.dot(wz_.col(other)) : state.z.col(other).dot(wz_.col(aa));
    soft_[inc.u] = sp(bil_[inc.u]);
    added += soft_[inc.u];
  }
  const auto su = static_cast<std::size_t>(self_u_);
  bil_[su] = za.dot(wz_.col(aa));
  soft_[su] = sp(bil_[su]);
  added += soft_[su];
  mass_ = mass_without_ + added;

  double terms = 0.0;
  for (const ObsIncident& o : obs_incident_) {
    obs_term_[o.obs] = obs_term(o.obs, bil_[obs_u_[o.obs]]);
    terms += obs_term_[o.obs];
  }
  cell_terms_ = terms_without_ + terms;
}

void BilinearCache::begin_weight(const LatentState& state, std::size_t k, std::size_t l) {
  if (k >= state.dims() || l >= state.dims()) {
    throw std::out_of_range("BilinearCache: weight index out of range");
  }
  wk_ = k;
  wl_ = l;
  const auto kk = static_cast<Eigen::Index>(k);
  const auto ll = static_cast<Eigen::Index>(l);
  wcoef_.resize(ucells_.size());
  for (std::size_t u = 0; u < ucells_.size(); ++u) {
    const Cell& c = ucells_[u];
    wcoef_[u] = state.z(kk, static_cast<Eigen::Index>(c.row)) *
                state.z(ll, static_cast<Eigen::Index>(c.col));
  }
  wobs_coef_.resize(obs_u_.size());
  for (std::size_t o = 0; o < obs_u_.size(); ++o) wobs_coef_[o] = wcoef_[obs_u_[o]];
  zrow_l_.assign(state.z.row(ll).begin(), state.z.row(ll).end());
  zrow_k_.assign(state.z.row(kk).begin(), state.z.row(kk).end());
}

double BilinearCache::weight_log_lik(double delta) {
  const double mass = simd::softplus_axpy_sum(bil_, wcoef_, delta);
  double terms = 0.0;
  for (std::size_t o = 0; o < obs_u_.size(); ++o) {
    terms += obs_term(o, bil_[obs_u_[o]] + delta * wobs_coef_[o]);
  }
  return assemble(mass, terms);
}

void BilinearCache::commit_weight(double delta) {
  simd::softplus_axpy(bil_, wcoef_, delta, soft_);
  double mass = 0.0;
  for (std::size_t u = 0; u < ucells_.size(); ++u) {
    bil_[u] += delta * wcoef_[u];
    mass += soft_[u];
  }
  mass_ = mass;
  double terms = 0.0;
  for (std::size_t o = 0; o < obs_u_.size(); ++o) {
    obs_term_[o] = obs_term(o, bil_[obs_u_[o]]);
    terms += obs_term_[o];
  }
  cell_terms_ = terms;
  const auto kk = static_cast<Eigen::Index>(wk_);
  const auto ll = static_cast<Eigen::Index>(wl_);
  for (std::size_t b = 0; b < n_; ++b) {
    wz_(kk, static_cast<Eigen::Index>(b)) += delta * zrow_l_[b];
    wtz_(ll, static_cast<Eigen::Index>(b)) += delta * zrow_k_[b];
  }
}

}  // namespace countlink
