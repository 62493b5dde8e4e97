#include "countlink/count_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countlink {

CountMatrix::CountMatrix(std::size_t n_nodes, bool symmetric)
    : n_nodes_(n_nodes), symmetric_(symmetric) {
  if (n_nodes == 0) throw std::invalid_argument("CountMatrix: n_nodes must be positive");
}

void CountMatrix::check_cell(Cell c) const {
  if (c.row >= n_nodes_ || c.col >= n_nodes_) {
    throw std::out_of_range("CountMatrix: cell (" + std::to_string(c.row) + ", " +
                            std::to_string(c.col) + ") outside " + std::to_string(n_nodes_) +
                            " nodes");
  }
}

Cell CountMatrix::canonical(Cell c) const {
  if (symmetric_ && c.row > c.col) return {c.col, c.row};
  return c;
}

void CountMatrix::set(Cell c, double count) {
  check_cell(c);
  if (!(count >= 0.0) || !std::isfinite(count)) {
    throw std::invalid_argument("CountMatrix: counts must be finite and nonnegative");
  }
  entries_[canonical(c)] = count;
}

void CountMatrix::add(Cell c, double count) {
  check_cell(c);
  if (!(count >= 0.0) || !std::isfinite(count)) {
    throw std::invalid_argument("CountMatrix: counts must be finite and nonnegative");
  }
  entries_[canonical(c)] += count;
}

void CountMatrix::erase(Cell c) {
  check_cell(c);
  entries_.erase(canonical(c));
}

bool CountMatrix::observed(Cell c) const {
  check_cell(c);
  return entries_.contains(canonical(c));
}

double CountMatrix::count(Cell c) const {
  check_cell(c);
  const auto it = entries_.find(canonical(c));
  return it == entries_.end() ? 0.0 : it->second;
}

std::size_t CountMatrix::nonzero_cells() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.second > 0; }));
}

double CountMatrix::total() const {
  double sum = 0.0;
  for (const auto& [cell, value] : entries_) sum += value;
  return sum;
}

bool CountMatrix::is_integral() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const auto& e) { return e.second == std::floor(e.second); });
}

bool CountMatrix::in_universe(Cell c) const {
  return c.row < n_nodes_ && c.col < n_nodes_ && (!symmetric_ || c.row <= c.col);
}

std::vector<Cell> CountMatrix::universe() const {
  std::vector<Cell> cells;
  cells.reserve(universe_size());
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    for (std::size_t j = symmetric_ ? i : 0; j < n_nodes_; ++j) cells.push_back({i, j});
  }
  return cells;
}

std::size_t CountMatrix::universe_size() const {
  return symmetric_ ? n_nodes_ * (n_nodes_ + 1) / 2 : n_nodes_ * n_nodes_;
}

void CountMatrix::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != n_nodes_) {
    throw std::invalid_argument("CountMatrix: label count does not match node count");
  }
  labels_ = std::move(labels);
}

std::string CountMatrix::label(std::size_t node) const {
  if (node >= n_nodes_) throw std::out_of_range("CountMatrix: node index out of range");
  return labels_.empty() ? std::to_string(node) : labels_[node];
}

CountMatrix CountMatrix::scaled(double factor) const {
  CountMatrix out = *this;
  for (auto& [cell, value] : out.entries_) value *= factor;
  return out;
}

}  // namespace countlink
