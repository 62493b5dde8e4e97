#include "countlink/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace countlink {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

CountFormat parse_count_format(std::string_view text) {
  if (text == "edge_list") return CountFormat::EdgeList;
  if (text == "pair_counts") return CountFormat::PairCounts;
  throw std::invalid_argument("unknown count format '" + std::string(text) + "'");
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

template <class T>
T parse_integer(std::string_view text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument(std::string("malformed ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

CountMatrix parse_counts(std::istream& in, CountFormat format, bool symmetric,
                         const std::string& source) {
  if (format == CountFormat::PairCounts && symmetric) {
    throw std::invalid_argument("pair_counts input is ordered; it cannot be loaded as symmetric");
  }
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> labels;
  const auto node = [&](std::string_view label) {
    const auto [it, inserted] = index.try_emplace(std::string(label), labels.size());
    if (inserted) labels.emplace_back(label);
    return it->second;
  };

  struct Triple {
    std::size_t a, b;
    double count;
  };
  std::vector<Triple> triples;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#node\t")) {
        const std::string_view label = line.substr(6);
        if (label.empty()) throw ParseError(source, line_no, "empty node label");
        node(label);
      }
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(source, line_no,
                       "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(source, line_no, "empty node label");
    const std::string_view count_text = fields[2];
    if (!count_text.empty() && count_text.front() == '-') {
      throw ParseError(source, line_no, "negative count '" + std::string(count_text) + "'");
    }
    unsigned long long count = 0;
    try {
      count = parse_integer<unsigned long long>(count_text, "count");
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, std::string(e.what()) + " (counts must be nonnegative integers)");
    }
    const std::size_t a = node(fields[0]);
    const std::size_t b = node(fields[1]);
    triples.push_back({a, b, static_cast<double>(count)});
  }
  if (labels.empty()) throw ParseError(source, line_no, "no data");

  CountMatrix data(labels.size(), symmetric);
  for (const Triple& t : triples) data.add({t.a, t.b}, t.count);
  data.set_labels(std::move(labels));
  return data;
}

CountMatrix load_counts(const std::filesystem::path& path, CountFormat format, bool symmetric) {
  std::ifstream in = open_in(path);
  return parse_counts(in, format, symmetric, path.string());
}

void write_counts(std::ostream& out, const CountMatrix& data) {
  for (std::size_t v = 0; v < data.n_nodes(); ++v) out << "#node\t" << data.label(v) << '\n';
  for (const auto& [cell, count] : data.entries()) {
    out << data.label(cell.row) << '\t' << data.label(cell.col) << '\t'
        << static_cast<unsigned long long>(count) << '\n';
  }
}

void save_counts(const std::filesystem::path& path, const CountMatrix& data) {
  if (!data.is_integral()) throw std::invalid_argument("save_counts: counts must be integers");
  std::ofstream out = open_out(path);
  write_counts(out, data);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::string join_doubles(const double* v, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string format_sample(std::size_t index, const Sample& sample) {
  const LatentState& st = sample.state;
  std::string line = "index=" + std::to_string(index);
  line += "\tprior=";
  line += to_string(st.prior);
  line += "\tn=" + std::to_string(st.n_nodes());
  line += "\td=" + std::to_string(st.dims());
  line += "\ttrain_ll=" + format_double(sample.train_log_lik);
  line += "\tlog_post=" + format_double(sample.log_posterior);
  line += "\tw=" + join_doubles(st.w.data(), static_cast<std::size_t>(st.w.size()));
  if (st.prior == PriorKind::Crp) {
    line += "\tassign=";
    for (std::size_t a = 0; a < st.assignments.size(); ++a) {
      if (a) line += ',';
      line += std::to_string(st.assignments[a]);
    }
  } else {
    line += "\tz=" + join_doubles(st.z.data(), static_cast<std::size_t>(st.z.size()));
  }
  return line;
}

Sample parse_sample(std::string_view line) {
  std::map<std::string_view, std::string_view> kv;
  for (std::string_view field : split_tabs(strip_cr(line))) {
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("sample record: field without '='");
    kv[field.substr(0, eq)] = field.substr(eq + 1);
  }
  const auto need = [&](std::string_view key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("sample record: missing '" + std::string(key) + "'");
    return it->second;
  };
  const PriorKind prior = parse_prior_kind(need("prior"));
  const auto n = parse_integer<std::size_t>(need("n"), "node count");
  const auto d = parse_integer<std::size_t>(need("d"), "dimension");
  const auto weights = split_commas(need("w"));
  if (weights.size() != d * d) throw std::invalid_argument("sample record: W has wrong size");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < weights.size(); ++i) w.data()[i] = parse_double(weights[i]);

  Sample s;
  if (prior == PriorKind::Crp) {
    std::vector<std::size_t> assignments;
    for (std::string_view v : split_commas(need("assign"))) {
      assignments.push_back(parse_integer<std::size_t>(v, "class index"));
    }
    if (assignments.size() != n) throw std::invalid_argument("sample record: wrong assignment count");
    s.state = LatentState::crp(std::move(assignments), std::move(w));
  } else {
    const auto zs = split_commas(need("z"));
    if (zs.size() != d * n) throw std::invalid_argument("sample record: Z has wrong size");
    Eigen::MatrixXd z(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < zs.size(); ++i) z.data()[i] = parse_double(zs[i]);
    s.state = LatentState::gaussian(std::move(z), std::move(w));
  }
  s.train_log_lik = parse_double(need("train_ll"));
  s.log_posterior = parse_double(need("log_post"));
  s.dims = d;
  return s;
}

void write_samples(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < samples.size(); ++i) out << format_sample(i, samples[i]) << '\n';
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip_cr(line).empty()) continue;
    try {
      samples.push_back(parse_sample(line));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return samples;
}

void write_trace(const std::filesystem::path& path, std::span<const Sample> samples,
                 std::span<const double> test_lls) {
  if (!test_lls.empty() && test_lls.size() != samples.size()) {
    throw std::invalid_argument("write_trace: test log-likelihoods do not match samples");
  }
  std::ofstream out = open_out(path);
  out << "sample_index\ttrain_ll\ttest_ll\tdims\tseconds\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << i << '\t' << format_double(samples[i].train_log_lik) << '\t'
        << (test_lls.empty() ? std::string("nan") : format_double(test_lls[i])) << '\t'
        << samples[i].dims << '\t' << format_double(samples[i].seconds_elapsed) << '\n';
  }
}

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || strip_cr(line).empty()) continue;
    const auto f = split_tabs(strip_cr(line));
    if (f.size() != 5) throw ParseError(path.string(), line_no, "expected 5 columns");
    try {
      rows.push_back({parse_integer<std::size_t>(f[0], "index"), parse_double(f[1]),
                      parse_double(f[2]), parse_integer<std::size_t>(f[3], "dims"),
                      parse_double(f[4])});
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return rows;
}

void write_grid(const std::filesystem::path& path, std::span<const double> values, std::size_t n) {
  if (values.size() != n * n) throw std::invalid_argument("write_grid: value count is not n*n");
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) out << '\t';
      out << format_double(values[i * n + j]);
    }
    out << '\n';
  }
}

std::vector<double> read_grid(const std::filesystem::path& path, std::size_t& n) {
  std::ifstream in = open_in(path);
  std::vector<double> values;
  std::string line;
  n = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip_cr(line).empty()) continue;
    const auto f = split_tabs(strip_cr(line));
    if (n == 0) n = f.size();
    if (f.size() != n) throw ParseError(path.string(), line_no, "ragged grid row");
    for (std::string_view v : f) values.push_back(parse_double(v));
  }
  if (values.size() != n * n) throw ParseError(path.string(), line_no, "grid is not square");
  return values;
}

void KeyValueDoc::set(std::string key, std::string value) {
  for (auto& [k, v] : fields_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  fields_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> KeyValueDoc::get(std::string_view key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KeyValueDoc::require(std::string_view key) const {
  auto v = get(key);
  if (!v) throw std::invalid_argument("report is missing '" + std::string(key) + "'");
  return *v;
}

void KeyValueDoc::write(const std::filesystem::path& path) const {
  std::ofstream out = open_out(path);
  for (const auto& [k, v] : fields_) out << k << '\t' << v << '\n';
}

KeyValueDoc KeyValueDoc::read(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  KeyValueDoc doc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view l = strip_cr(line);
    if (l.empty()) continue;
    const std::size_t tab = l.find('\t');
    if (tab == std::string_view::npos) throw ParseError(path.string(), line_no, "expected key<TAB>value");
    doc.set(std::string(l.substr(0, tab)), std::string(l.substr(tab + 1)));
  }
  return doc;
}

std::string split_fingerprint(std::uint64_t seed, std::string_view scheme, double fraction,
                              const CountMatrix& data) {
  std::ostringstream canon;
  canon << "seed=" << seed << ";scheme=" << scheme << ";fraction=" << format_double(fraction)
        << ";symmetric=" << data.symmetric() << ";n=" << data.n_nodes() << ';';
  for (std::size_t v = 0; v < data.n_nodes(); ++v) canon << data.label(v) << '\n';
  for (const auto& [cell, count] : data.entries()) {
    canon << cell.row << ',' << cell.col << ',' << format_double(count) << ';';
  }
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, h, 16);
  return std::string(16 - static_cast<std::size_t>(ptr - buf), '0') + std::string(buf, ptr);
}

namespace {

std::string fixed(std::string_view text, int precision) {
  const double v = parse_double(text);
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, ptr);
}

std::string sci(std::string_view text) {
  const double v = parse_double(text);
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 1);
  return std::string(buf, ptr);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string compare_reports(const KeyValueDoc& a, const KeyValueDoc& b) {
  if (a.require("split_fingerprint") != b.require("split_fingerprint")) {
    throw std::invalid_argument("compare: reports come from different splits (fingerprint mismatch)");
  }
  const std::vector<std::string> header{"Held out type", "Model",  "Dimens.",
                                        "sec/sample",    "Kendall's tau (p value)", "dcor",
                                        "test ll"};
  std::vector<std::vector<std::string>> rows{header};
  for (const KeyValueDoc* doc : {&a, &b}) {
    std::vector<std::string> row;
    row.push_back(doc->require("holdout"));
    row.push_back(doc->require("model"));
    row.push_back(fixed(doc->require("mean_dims"), 1));
    row.push_back(fixed(doc->require("sec_per_sample"), 3));
    if (auto tau = doc->get("kendall_tau")) {
      row.push_back(fixed(*tau, 4) + " (" + sci(doc->require("tau_p_value")) + ")");
      row.push_back(fixed(doc->require("dcor"), 4));
      row.push_back(fixed(doc->require("test_ll"), 2));
    } else {
      row.insert(row.end(), {"-", "-", "-"});
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out += c + 1 < rows[r].size() ? pad(rows[r][c], width[c] + 2) : rows[r][c];
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace countlink
