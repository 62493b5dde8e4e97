#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "countlink/evaluation.hpp"
#include "countlink/likelihood.hpp"
#include "oracles.hpp"

using namespace countlink;

namespace {

CountMatrix random_counts(std::size_t n, std::mt19937_64& rng, double density = 0.6) {
  CountMatrix m(n, false);
  std::uniform_real_distribution<double> u(0, 1);
  std::poisson_distribution<int> p(4.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (u(rng) < density) m.set({i, j}, p(rng));
  return m;
}

LatentState random_state(std::size_t d, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd z(d, n), w(d, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
  return LatentState::gaussian(z, w);
}

}  // namespace

TEST_CASE("interaction split conserves counts cell by cell") {
  std::mt19937_64 rng(1);
  const CountMatrix data = random_counts(6, rng);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const HoldoutSplit s = split_interactions(data, 0.8, seed);
    CHECK(s.scheme == HoldoutScheme::Interactions);
    CHECK(s.train.mask_size() == data.mask_size());
    CHECK(s.test.mask_size() == data.mask_size());
    for (const auto& [cell, count] : data.entries()) CHECK(s.train.count(cell) + s.test.count(cell) == count);
  }
  const HoldoutSplit again = split_interactions(data, 0.8, 17);
  CHECK(again.train == split_interactions(data, 0.8, 17).train);
}

TEST_CASE("interaction split thins at the requested rate") {
  CountMatrix m(1, false);
  m.set({0, 0}, 10);
  double train = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) train += split_interactions(m, 0.8, seed).train.count({0, 0});
  CHECK(train / 2000 == doctest::Approx(8.0).epsilon(0.02));

  CountMatrix unit(1, false);
  unit.set({0, 0}, 1);
  int kept = 0;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) kept += int(split_interactions(unit, 0.999, seed).train.count({0, 0}));
  CHECK(kept >= 4980);

  CountMatrix frac(1, false);
  frac.set({0, 0}, 1.5);
  CHECK_THROWS(split_interactions(frac, 0.8, 0));
  CHECK_THROWS(split_interactions(m, 1.0, 0));
}

TEST_CASE("pair split partitions the mask") {
  std::mt19937_64 rng(2);
  CountMatrix ten(10, false);
  for (std::size_t i = 0; i < 10; ++i) ten.set({i, (i + 3) % 10}, double(i));
  const HoldoutSplit s10 = split_pairs(ten, 0.8, 5);
  CHECK(s10.test.mask_size() == 2);
  CHECK(s10.train.mask_size() == 8);

  const CountMatrix data = random_counts(7, rng);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const HoldoutSplit s = split_pairs(data, 0.8, seed);
    CHECK(s.test.mask_size() == std::size_t(std::floor(0.2 * double(data.mask_size()) + 1e-9)));
    for (const auto& [cell, count] : data.entries()) {
      CHECK(s.train.observed(cell) != s.test.observed(cell));
      CHECK((s.train.observed(cell) ? s.train.count(cell) : s.test.count(cell)) == count);
    }
    CHECK(s.train.mask_size() + s.test.mask_size() == data.mask_size());
  }
  CountMatrix small(2, false);
  small.set({0, 1}, 1);
  CHECK_THROWS(split_pairs(small, 0.8, 0));
}

TEST_CASE("test log-likelihood") {
  std::mt19937_64 rng(3);
  const CountMatrix data = random_counts(4, rng);
  const HoldoutSplit split = split_interactions(data, 0.8, 1);
  const SmoothingScheme sm = SmoothingScheme::from_training(split.train, 1.0);
  const Sample a{random_state(2, 4, rng), 0, 0, 0, 2};
  const Sample b{random_state(2, 4, rng), 0, 0, 0, 2};
  const double la = sample_test_log_likelihood(a.state, split.test, sm);
  const double lb = sample_test_log_likelihood(b.state, split.test, sm);
  CHECK(test_log_likelihood(std::span<const Sample>(&a, 1), split.test, sm) == doctest::Approx(la).epsilon(1e-14));
  const std::vector<Sample> twice{a, a};
  CHECK(test_log_likelihood(twice, split.test, sm) == doctest::Approx(la).epsilon(1e-14));
  const std::vector<Sample> both{a, b};
  CHECK(test_log_likelihood(both, split.test, sm) ==
        doctest::Approx(std::log(0.5 * (std::exp(la) + std::exp(lb)))).epsilon(1e-12));
  CHECK_THROWS(test_log_likelihood(std::span<const Sample>(), split.test, sm));

  CountMatrix zero_test(4, false);
  zero_test.set({1, 2}, 0);
  CHECK(test_log_likelihood(twice, zero_test, sm) == 0.0);
}

TEST_CASE("kendall tau examples") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> rev(x.rbegin(), x.rend());
  CHECK(kendall_tau(x, x).tau == doctest::Approx(1.0));
  CHECK(kendall_tau(x, rev).tau == doctest::Approx(-1.0));
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 3, 2};
  CHECK(kendall_tau(a, b).tau == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS(kendall_tau(a, x));
  const std::vector<double> flat{2, 2, 2};
  CHECK_THROWS(kendall_tau(a, flat));
  CHECK_THROWS(kendall_tau(std::vector<double>{1}, std::vector<double>{1}));
}

TEST_CASE("kendall tau-b and p-value against frozen reference values") {
  struct Ref {
    std::vector<double> x, y;
    double tau, p;
  };
  const std::vector<Ref> refs{
      {{1, 2, 3}, {1, 3, 2}, 0.33333333333333337, 0.6015081344405899},
      {{1, 2, 2, 3, 4, 4, 5}, {2, 1, 2, 3, 3, 5, 4}, 0.6842105263157894, 0.041136383569940586},
      {{0, 0, 1, 1, 2, 2, 3, 3, 4, 9}, {1, 0, 1, 0, 2, 3, 3, 2, 5, 5}, 0.7901836773196717, 0.00302240565876529},
      {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, {3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8}, 0.3940062612820493,
       0.08227777272211645},
  };
  for (const Ref& r : refs) {
    const KendallResult k = kendall_tau(r.x, r.y);
    CHECK(k.tau == doctest::Approx(r.tau).epsilon(1e-12));
    CHECK(k.p_value == doctest::Approx(r.p).epsilon(1e-9));
  }
}

TEST_CASE("kendall tau matches brute force with ties") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> small(0, 5);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rep % 40;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rep % 2 ? small(rng) : g(rng);
      y[i] = rep % 3 ? small(rng) : g(rng);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    const KendallResult k = kendall_tau(x, y);
    CHECK(std::fabs(k.tau - oracle::kendall_tau_b(x, y)) < 1e-12);
    CHECK(k.p_value > 0.0);
    CHECK(k.p_value <= 1.0);
    CHECK(kendall_tau(y, x).tau == doctest::Approx(k.tau).epsilon(1e-13));
    std::vector<double> ex(n);
    for (std::size_t i = 0; i < n; ++i) ex[i] = std::exp(0.3 * x[i]) - 4.0;
    CHECK(kendall_tau(ex, y).tau == k.tau);
  }
}

TEST_CASE("kendall p-value is calibrated under independence") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  int rejections = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(50), y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      x[i] = g(rng);
      y[i] = g(rng);
    }
    if (kendall_tau(x, y).p_value < 0.05) ++rejections;
  }
  CHECK(rejections >= 30);
  CHECK(rejections <= 70);
}

TEST_CASE("distance correlation examples and properties") {
  const std::vector<double> x{1, 2, 4};
  const std::vector<double> y{1, 3, 9};
  CHECK(std::fabs(distance_correlation(x, y) - 0.9965858156514149) < 1e-12);
  CHECK(std::fabs(distance_correlation(x, x) - 1.0) < 1e-12);
  const std::vector<double> a{0, 1};
  const std::vector<double> c{5, 5};
  CHECK(distance_correlation(a, c) == 0.0);
  CHECK_THROWS(distance_correlation(a, x));

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rep % 29;
    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = g(rng);
      v[i] = rep % 2 ? u[i] * u[i] + 0.1 * g(rng) : g(rng);
    }
    const double d = distance_correlation(u, v);
    CHECK(std::fabs(d - oracle::distance_correlation(u, v)) < 1e-12);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(std::fabs(distance_correlation(v, u) - d) < 1e-12);
    std::vector<double> au(n);
    for (std::size_t i = 0; i < n; ++i) au[i] = 3.5 * u[i] - 2.0;
    CHECK(std::fabs(distance_correlation(au, v) - d) < 1e-10);
  }
}

TEST_CASE("evaluate assembles a consistent report") {
  std::mt19937_64 rng(7);
  const CountMatrix data = random_counts(5, rng, 0.9);
  const HoldoutSplit split = split_interactions(data, 0.7, 3);
  const SmoothingScheme sm = SmoothingScheme::from_training(split.train, 1.0);
  std::vector<Sample> samples;
  for (int s = 0; s < 4; ++s) samples.push_back({random_state(2, 5, rng), -1.0, -2.0, 0.5 + s, 2});
  const EvalReport r = evaluate(samples, split, sm);
  CHECK(r.test_cells == split.test.mask_size());
  CHECK(r.kendall_tau >= -1.0);
  CHECK(r.kendall_tau <= 1.0);
  CHECK(r.tau_p_value > 0.0);
  CHECK(r.tau_p_value <= 1.0);
  CHECK(r.dcor >= 0.0);
  CHECK(r.dcor <= 1.0);
  CHECK(r.sec_per_sample == doctest::Approx(2.0));
  CHECK(r.mean_dims == doctest::Approx(2.0));
  CHECK(r.test_log_lik == doctest::Approx(test_log_likelihood(samples, split.test, sm)));

  const auto cells = [&] {
    std::vector<Cell> c;
    for (const auto& [cell, count] : split.test.entries()) c.push_back(cell);
    return c;
  }();
  const auto predicted = predictive_probs(samples, sm, cells, split.test.universe());
  std::vector<double> empirical;
  for (const Cell& c : cells) empirical.push_back(split.test.count(c) / split.test.total());
  CHECK(r.kendall_tau == doctest::Approx(kendall_tau(empirical, predicted).tau).epsilon(1e-14));

  HoldoutSplit one = split;
  one.test = CountMatrix(5, false);
  one.test.set({1, 1}, 3);
  CHECK_THROWS(evaluate(samples, one, sm));
}

TEST_CASE("a predictive equal to the empirical distribution ranks perfectly") {
  CountMatrix test(2, false);
  test.set({0, 0}, 1);
  test.set({0, 1}, 2);
  test.set({1, 0}, 3);
  test.set({1, 1}, 4);
  Eigen::MatrixXd z(1, 2);
  z << 1.0, 2.0;
  Eigen::MatrixXd w(1, 1);
  w << 1.0;
  // pmf grows with z_i * z_j; the counts are ordered the same way except for the tie at (0,1)/(1,0).
  const Sample s{LatentState::gaussian(z, w), 0, 0, 0, 1};
  const HoldoutSplit split{test, test, HoldoutScheme::Interactions, 0.8};
  const EvalReport r = evaluate(std::span<const Sample>(&s, 1), split, {1e-9, 4});
  CHECK(r.kendall_tau > 0.8);
}
