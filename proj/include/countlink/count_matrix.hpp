#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace countlink {

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const Cell&) const = default;
};

// Sparse n x n matrix of nonnegative interaction counts. The key set of
// entries() is the observation mask: a keyed cell with count 0 is an observed
// zero, an absent cell is missing. Symmetric matrices store only the canonical
// (min, max) cell and mirror reads.
class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(std::size_t n_nodes, bool symmetric);

  std::size_t n_nodes() const { return n_nodes_; }
  bool symmetric() const { return symmetric_; }

  Cell canonical(Cell c) const;

  // Marks the cell observed and sets its count.
  void set(Cell c, double count);
  // Marks the cell observed and adds to its count.
  void add(Cell c, double count);
  void erase(Cell c);

  bool observed(Cell c) const;
  double count(Cell c) const;

  const std::map<Cell, double>& entries() const { return entries_; }
  std::size_t mask_size() const { return entries_.size(); }
  std::size_t nonzero_cells() const;
  double total() const;
  bool is_integral() const;

  // Every cell whose pmf enters the normalization: all n^2 ordered cells, or
  // the i <= j cells when symmetric.
  bool in_universe(Cell c) const;
  std::vector<Cell> universe() const;
  std::size_t universe_size() const;

  // Optional node labels, one per node, in index order.
  const std::vector<std::string>& labels() const { return labels_; }
  void set_labels(std::vector<std::string> labels);
  std::string label(std::size_t node) const;

  // Same mask and labels, every count multiplied by factor.
  CountMatrix scaled(double factor) const;

  bool operator==(const CountMatrix&) const = default;

 private:
  void check_cell(Cell c) const;

  std::size_t n_nodes_ = 0;
  bool symmetric_ = false;
  std::map<Cell, double> entries_;
  std::vector<std::string> labels_;
};

}  // namespace countlink
