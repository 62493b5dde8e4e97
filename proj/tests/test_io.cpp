#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "countlink/io.hpp"
#include "countlink/sampler.hpp"

using namespace countlink;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("countlink_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CountMatrix parse(const std::string& text, bool symmetric = false,
                  CountFormat f = CountFormat::EdgeList) {
  std::istringstream in(text);
  return parse_counts(in, f, symmetric, "test");
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("edge list examples") {
  const CountMatrix m = parse("alice\tbob\t3\nbob\tcarol\t1\n");
  CHECK(m.n_nodes() == 3);
  CHECK(m.mask_size() == 2);
  CHECK(m.count({0, 1}) == 3);
  CHECK(m.count({1, 2}) == 1);
  CHECK(m.label(2) == "carol");

  const CountMatrix dup = parse("a\tb\t2\na\tb\t2\n");
  CHECK(dup.count({0, 1}) == 4);
  CHECK(dup.mask_size() == 1);

  const CountMatrix sym = parse("a\tb\t2\nb\ta\t3\n", true);
  CHECK(sym.mask_size() == 1);
  CHECK(sym.entries().begin()->first == Cell{0, 1});
  CHECK(sym.count({0, 1}) == 5);

  const CountMatrix crlf = parse("# header\r\nx\ty\t0\r\n\r\n");
  CHECK(crlf.observed({0, 1}));
  CHECK(crlf.count({0, 1}) == 0);
}

TEST_CASE("malformed edge lists report the line") {
  CHECK(error_line("a\tb\t1\na\tb\n") == 2);
  CHECK(error_line("a\tb\t1\nc\td\t1.5\n") == 2);
  CHECK(error_line("a\tb\t-2\n") == 1);
  CHECK(error_line("a\tb\tx\n") == 1);
  CHECK(error_line("a\tb\t1\t4\n") == 1);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("# only a comment\n"), ParseError);
  CHECK_THROWS_AS(parse("a\tb\t1\n", true, CountFormat::PairCounts), std::invalid_argument);
  CHECK(parse("a\tb\t1\nb\ta\t2\n", false, CountFormat::PairCounts).mask_size() == 2);
  CHECK_THROWS(load_counts("/nonexistent/file.tsv", CountFormat::EdgeList, false));
}

TEST_CASE("count files round trip") {
  const fs::path dir = scratch_dir("roundtrip");
  CountMatrix m = parse("#node\tlonely\nq\tr\t7\nr\tr\t0\ns\tq\t2\n");
  CHECK(m.n_nodes() == 4);
  CHECK(m.label(0) == "lonely");
  save_counts(dir / "m.tsv", m);
  const CountMatrix back = load_counts(dir / "m.tsv", CountFormat::EdgeList, false);
  CHECK(back == m);

  CountMatrix sym = parse("u\tv\t1\nv\tw\t4\nw\tu\t2\n", true);
  save_counts(dir / "s.tsv", sym);
  CHECK(load_counts(dir / "s.tsv", CountFormat::EdgeList, true) == sym);
  fs::remove_all(dir);
}

TEST_CASE("numbers format losslessly") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int t = 0; t < 1000; ++t) {
    const double v = g(rng) * std::pow(10.0, t % 40 - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK_THROWS(parse_double("1,5"));
  CHECK_THROWS(parse_double(""));
}

TEST_CASE("samples round trip") {
  const fs::path dir = scratch_dir("samples");
  CountMatrix data(3, false);
  data.set({0, 1}, 2);
  data.set({2, 2}, 1);
  Hyperparams h;
  h.d_gaussian = 2;
  ChainConfig cfg;
  cfg.n_samples = 3;
  for (PriorKind p : {PriorKind::Gaussian, PriorKind::Crp}) {
    cfg.prior = p;
    const auto samples = run_chain(data, h, cfg);
    write_samples(dir / "s.txt", samples);
    const auto back = read_samples(dir / "s.txt");
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].state == samples[i].state);
      CHECK(back[i].train_log_lik == samples[i].train_log_lik);
      CHECK(back[i].log_posterior == samples[i].log_posterior);
      CHECK(back[i].dims == samples[i].dims);
    }
    const std::vector<double> test_lls{-1.5, -2.25, -3.0};
    write_trace(dir / "t.tsv", samples, test_lls);
    const auto trace = read_trace(dir / "t.tsv");
    REQUIRE(trace.size() == 3);
    CHECK(trace[1].test_ll == -2.25);
    CHECK(trace[2].seconds == samples[2].seconds_elapsed);
    write_trace(dir / "t.tsv", samples, {});
    CHECK(std::isnan(read_trace(dir / "t.tsv")[0].test_ll));
  }
  CHECK_THROWS(parse_sample("index=0\tprior=gaussian\tn=1\td=1\ttrain_ll=0\tlog_post=0\tw=1,2\tz=1"));
  fs::remove_all(dir);
}

TEST_CASE("grid and key-value documents round trip") {
  const fs::path dir = scratch_dir("grid");
  const std::vector<double> g{0.1, 0.2, 1.0 / 3.0, 0.4};
  write_grid(dir / "g.tsv", g, 2);
  std::size_t n = 0;
  CHECK(read_grid(dir / "g.tsv", n) == g);
  CHECK(n == 2);
  CHECK_THROWS(write_grid(dir / "g.tsv", g, 3));

  KeyValueDoc doc;
  doc.set("a", "1");
  doc.set("b", "x y");
  doc.set("a", "2");
  doc.write(dir / "r.txt");
  const KeyValueDoc back = KeyValueDoc::read(dir / "r.txt");
  CHECK(back.fields() == doc.fields());
  CHECK(back.require("a") == "2");
  CHECK_FALSE(back.get("c").has_value());
  CHECK_THROWS(back.require("c"));
  fs::remove_all(dir);
}

TEST_CASE("split fingerprints and report comparison") {
  CountMatrix data(2, false);
  data.set({0, 1}, 4);
  const std::string f = split_fingerprint(1, "interactions", 0.8, data);
  CHECK(f.size() == 16);
  CHECK(f == split_fingerprint(1, "interactions", 0.8, data));
  CHECK(f != split_fingerprint(2, "interactions", 0.8, data));
  CHECK(f != split_fingerprint(1, "pairs", 0.8, data));
  CountMatrix other = data;
  other.set({1, 1}, 1);
  CHECK(f != split_fingerprint(1, "interactions", 0.8, other));

  KeyValueDoc a;
  a.set("model", "crp");
  a.set("holdout", "interactions");
  a.set("split_fingerprint", f);
  a.set("mean_dims", "21.7");
  a.set("sec_per_sample", "996");
  a.set("kendall_tau", "0.3559");
  a.set("tau_p_value", "7e-24");
  a.set("dcor", "0.3837");
  a.set("test_ll", "-5625.08");
  const std::string table = compare_reports(a, a);
  std::istringstream lines(table);
  std::string header, rule, row1, row2;
  std::getline(lines, header);
  std::getline(lines, rule);
  std::getline(lines, row1);
  std::getline(lines, row2);
  CHECK(row1 == row2);
  const std::vector<std::string> cols{"Held out type", "Model", "Dimens.", "sec/sample",
                                      "Kendall's tau (p value)", "dcor", "test ll"};
  std::size_t pos = 0;
  for (const std::string& c : cols) {
    const std::size_t at = header.find(c, pos);
    REQUIRE(at != std::string::npos);
    pos = at + c.size();
  }
  CHECK(row1.find("0.3559 (7.0e-24)") != std::string::npos);
  CHECK(row1.find("21.7") != std::string::npos);
  KeyValueDoc b = a;
  b.set("split_fingerprint", "0000000000000000");
  CHECK_THROWS(compare_reports(a, b));
}
