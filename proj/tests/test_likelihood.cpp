#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "countlink/likelihood.hpp"
#include "countlink/sample.hpp"
#include "oracles.hpp"

using namespace countlink;

namespace {

DcmParams params(std::vector<double> alphas) {
  DcmParams p;
  p.alphas = std::move(alphas);
  for (double a : p.alphas) p.total_alpha += a;
  return p;
}

LatentState random_state(std::size_t d, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd z(d, n), w(d, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
  return LatentState::gaussian(z, w);
}

}  // namespace

TEST_CASE("dcm point values") {
  const std::vector<double> a{1, 0};
  CHECK(std::fabs(dcm_log_prob(a, params({1, 1})) - std::log(0.5)) < 1e-12);
  const std::vector<double> b{1, 1};
  CHECK(std::fabs(dcm_log_prob(b, params({1, 1})) - std::log(1.0 / 6.0)) < 1e-12);
  const std::vector<double> zeros{0, 0, 0};
  CHECK(dcm_log_prob(zeros, params({0.3, 2, 5})) == 0.0);
}

TEST_CASE("dcm normalizes with the multinomial coefficient") {
  std::mt19937_64 rng(11);
  std::gamma_distribution<double> g(1.5, 1.0);
  for (std::size_t k : {2u, 3u}) {
    for (int n = 1; n <= 5; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> alpha(k);
        for (double& a : alpha) a = g(rng) + 1e-3;
        const DcmParams p = params(alpha);
        double total = 0.0;
        std::vector<int> cur;
        oracle::compositions(n, k, cur, [&](const std::vector<int>& c) {
          std::vector<double> counts(c.begin(), c.end());
          double coef = std::lgamma(n + 1.0);
          for (int v : c) coef -= std::lgamma(v + 1.0);
          const double lp = dcm_log_prob(counts, p);
          CHECK(std::exp(coef + lp) == doctest::Approx(oracle::polya_prob(c, alpha)).epsilon(1e-10));
          total += std::exp(coef + lp);
        });
        CHECK(std::fabs(total - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("dcm errors and permutation invariance") {
  const std::vector<double> c{2, 0.5, 3};
  CHECK_THROWS(dcm_log_prob(std::vector<double>{1, 2}, params({1, 1, 1})));
  CHECK_THROWS(dcm_log_prob(std::vector<double>{-1, 2}, params({1, 1})));
  const double base = dcm_log_prob(c, params({0.2, 1.5, 0.7}));
  const std::vector<double> perm{3, 2, 0.5};
  CHECK(dcm_log_prob(perm, params({0.7, 0.2, 1.5})) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("dcm_alphas examples") {
  std::mt19937_64 rng(4);
  LatentState s = random_state(2, 3, rng);
  s.w.setZero();
  const std::vector<Cell> one{{0, 1}};
  CHECK(dcm_alphas(s, {1.0, 4}, one).alphas[0] == doctest::Approx(0.94314718055994531).epsilon(1e-14));
  const std::vector<Cell> three{{0, 0}, {1, 2}, {2, 1}};
  CHECK(dcm_alphas(s, {3.0, 3}, three).total_alpha == doctest::Approx(5.0794415416798359).epsilon(1e-14));
  CHECK(dcm_alphas(s, {1e-12, 1}, one).alphas[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("smoothing is monotone in alpha_dcm") {
  std::mt19937_64 rng(5);
  const LatentState s = random_state(3, 4, rng);
  CountMatrix m(4, false);
  const auto u = m.universe();
  const auto lo = dcm_alphas(s, {0.5, 3}, u);
  const auto hi = dcm_alphas(s, {0.6, 3}, u);
  for (std::size_t c = 0; c < u.size(); ++c) CHECK(hi.alphas[c] > lo.alphas[c]);
}

TEST_CASE("data likelihood examples") {
  std::mt19937_64 rng(6);
  LatentState s = random_state(2, 2, rng);
  CountMatrix empty(2, false);
  CHECK(data_log_likelihood(empty, s, {1.0, 1}) == 0.0);

  Eigen::MatrixXd z(1, 1);
  z << 0.7;
  Eigen::MatrixXd w(1, 1);
  w << -0.2;
  CountMatrix single(1, false);
  single.set({0, 0}, 1);
  CHECK(std::fabs(data_log_likelihood(single, LatentState::gaussian(z, w), {1e-9, 1})) < 1e-12);

  s.w.setZero();
  CountMatrix sym(2, true);
  sym.set({0, 1}, 2);
  const double s_cell = 1.0;
  const double a = std::log(2.0) + s_cell;
  const std::vector<double> counts{2, 0, 0};
  const double expected = dcm_log_prob(counts, params({a, a, a}));
  CHECK(data_log_likelihood(sym, s, {1.0, 1}) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected == doctest::Approx(-1.9128146633826330).epsilon(1e-13));
}

TEST_CASE("held-out cells leave the counts but stay in the normalization") {
  std::mt19937_64 rng(8);
  const LatentState s = random_state(2, 3, rng);
  CountMatrix m(3, false);
  m.set({0, 1}, 4);
  m.set({2, 2}, 1);
  m.set({1, 0}, 0);
  const SmoothingScheme sm{1.0, 2};
  const auto u = m.universe();
  const DcmParams all = dcm_alphas(s, sm, u);
  double terms = 0.0;
  double n = 0.0;
  for (const auto& [cell, count] : m.entries()) {
    const auto idx = std::find(u.begin(), u.end(), cell) - u.begin();
    terms += std::lgamma(count + all.alphas[idx]) - std::lgamma(all.alphas[idx]);
    n += count;
  }
  const double expected = std::lgamma(all.total_alpha) - std::lgamma(n + all.total_alpha) + terms;
  CHECK(data_log_likelihood(m, s, sm) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("data likelihood does not depend on insertion order") {
  std::mt19937_64 rng(9);
  const LatentState s = random_state(2, 4, rng);
  CountMatrix a(4, false), b(4, false);
  const std::vector<std::pair<Cell, double>> cells{{{0, 1}, 3}, {{3, 2}, 1}, {{2, 2}, 5}, {{1, 3}, 0}};
  for (const auto& [c, v] : cells) a.set(c, v);
  for (auto it = cells.rbegin(); it != cells.rend(); ++it) b.set(it->first, it->second);
  CHECK(data_log_likelihood(a, s, {1, 3}) == data_log_likelihood(b, s, {1, 3}));
}

TEST_CASE("predictive probabilities") {
  std::mt19937_64 rng(10);
  LatentState s = random_state(2, 3, rng);
  CountMatrix m(3, false);
  const auto u = m.universe();
  s.w.setZero();
  const Sample flat{s, 0, 0, 0, 2};
  CHECK(predictive_prob(std::span<const Sample>(&flat, 1), {5.0, 2}, 1, 2, u) ==
        doctest::Approx(1.0 / 9.0).epsilon(1e-14));

  const Sample a{random_state(2, 3, rng), 0, 0, 0, 2};
  const Sample b{random_state(2, 3, rng), 0, 0, 0, 2};
  const SmoothingScheme sm{1.0, 4};
  const std::vector<Sample> both{a, b};
  const std::vector<Sample> twice{a, a};
  const double pa = predictive_prob(std::span<const Sample>(&a, 1), sm, 0, 2, u);
  const double pb = predictive_prob(std::span<const Sample>(&b, 1), sm, 0, 2, u);
  CHECK(predictive_prob(both, sm, 0, 2, u) == doctest::Approx(0.5 * (pa + pb)).epsilon(1e-14));
  CHECK(predictive_prob(twice, sm, 0, 2, u) == doctest::Approx(pa).epsilon(1e-14));

  const auto all = predictive_probs(both, sm, u, u);
  double total = 0.0;
  for (double p : all) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS(predictive_prob(std::span<const Sample>(), sm, 0, 0, u));
}

TEST_CASE("smoothing from training counts seen cells") {
  CountMatrix m(3, false);
  m.set({0, 1}, 2);
  m.set({1, 1}, 0);
  m.set({2, 0}, 7);
  const auto sm = SmoothingScheme::from_training(m, 2.0);
  CHECK(sm.k_seen == 2);
  CHECK(sm.per_cell() == 1.0);
  CountMatrix none(2, false);
  CHECK(SmoothingScheme::from_training(none, 1.0).k_seen == 1);
}
