#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "countlink/count_matrix.hpp"
#include "countlink/evaluation.hpp"
#include "countlink/sample.hpp"

namespace countlink {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class CountFormat { EdgeList, PairCounts };

CountFormat parse_count_format(std::string_view text);

// Tab-separated `label_a<TAB>label_b<TAB>count` lines. Labels map to dense
// indices in first-appearance order and duplicate cells sum. Lines starting
// with '#' are comments, except `#node<TAB>label`, which declares a node (so
// isolated nodes and the index order survive a save/load round trip).
// PairCounts is the same layout read as ordered pairs; it rejects symmetric.
CountMatrix parse_counts(std::istream& in, CountFormat format, bool symmetric,
                         const std::string& source = "<stream>");
CountMatrix load_counts(const std::filesystem::path& path, CountFormat format, bool symmetric);

void write_counts(std::ostream& out, const CountMatrix& data);
void save_counts(const std::filesystem::path& path, const CountMatrix& data);

// Shortest locale-independent form with 17 significant digits.
std::string format_double(double value);
double parse_double(std::string_view text);

// One record per line: tab-separated key=value fields holding the state and
// its likelihood diagnostics. Wall-clock time is not part of the record.
std::string format_sample(std::size_t index, const Sample& sample);
Sample parse_sample(std::string_view line);
void write_samples(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> read_samples(const std::filesystem::path& path);

// Columns: sample_index, train_ll, test_ll, dims, seconds. test_lls may be
// empty (no holdout), in which case the column holds "nan".
void write_trace(const std::filesystem::path& path, std::span<const Sample> samples,
                 std::span<const double> test_lls);

struct TraceRow {
  std::size_t index = 0;
  double train_ll = 0.0;
  double test_ll = 0.0;
  std::size_t dims = 0;
  double seconds = 0.0;
};
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

// Dense n x n grid of values, tab separated.
void write_grid(const std::filesystem::path& path, std::span<const double> values, std::size_t n);
std::vector<double> read_grid(const std::filesystem::path& path, std::size_t& n);

// Ordered `key<TAB>value` document.
class KeyValueDoc {
 public:
  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

  void write(const std::filesystem::path& path) const;
  static KeyValueDoc read(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

// Hash of the split parameters and the source data; identical splits of the
// same data share it.
std::string split_fingerprint(std::uint64_t seed, std::string_view scheme, double fraction,
                              const CountMatrix& data);

// Table in the layout: Held out type, Model, Dimens., sec/sample,
// Kendall's tau (p value), dcor, test ll. Throws when the reports come from
// different splits.
std::string compare_reports(const KeyValueDoc& a, const KeyValueDoc& b);

}  // namespace countlink
