#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "countlink/bilinear_cache.hpp"
#include "countlink/likelihood.hpp"
#include "countlink/model.hpp"
#include "countlink/simd/kernels.hpp"

using namespace countlink;

namespace {

CountMatrix random_counts(std::size_t n, bool symmetric, std::mt19937_64& rng) {
  CountMatrix m(n, symmetric);
  std::uniform_real_distribution<double> u(0, 1);
  std::poisson_distribution<int> p(3.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (u(rng) < 0.5) m.set({i, j}, p(rng));
  return m;
}

LatentState random_state(std::size_t d, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd z(d, n), w(d, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
  return LatentState::gaussian(z, w);
}

std::vector<double> random_vector(std::size_t n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("cache agrees with the from-scratch likelihood") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (bool symmetric : {false, true}) {
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t n = 7;
      const CountMatrix data = random_counts(n, symmetric, rng);
      const SmoothingScheme sm = SmoothingScheme::from_training(data, 1.3);
      LatentState s = random_state(3, n, rng);
      std::vector<std::uint8_t> active(n, 1);
      if (rep % 2) active[2] = active[5] = 0;
      const std::span<const std::uint8_t> mask = rep % 2 ? std::span<const std::uint8_t>(active)
                                                         : std::span<const std::uint8_t>();
      BilinearCache cache(data, sm, mask);
      cache.rebuild(s);
      CHECK(std::fabs(cache.log_lik() - data_log_likelihood(data, s, sm, mask)) < 1e-9);

      for (std::size_t a = 0; a < n; ++a) {
        if (!cache.active(a)) continue;
        cache.begin_node(a);
        for (std::size_t k = 0; k < 3; ++k) {
          cache.prepare_coordinate(s, k);
          const double delta = g(rng);
          LatentState moved = s;
          moved.z(Eigen::Index(k), Eigen::Index(a)) += delta;
          CHECK(std::fabs(cache.coordinate_log_lik(delta) - data_log_likelihood(data, moved, sm, mask)) < 1e-9);
          s = moved;
          cache.commit_coordinate(s, delta);
        }
        const Eigen::VectorXd replacement = Eigen::VectorXd::Random(3);
        LatentState other = s;
        other.z.col(Eigen::Index(a)) = replacement;
        const double guess = cache.node_log_lik([&](const Cell& c) { return bilinear(other, c.row, c.col); });
        CHECK(std::fabs(guess - data_log_likelihood(data, other, sm, mask)) < 1e-9);
        cache.commit_node(s);
        CHECK(std::fabs(cache.log_lik() - data_log_likelihood(data, s, sm, mask)) < 1e-9);
      }

      for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t l = 0; l < 3; ++l) {
          cache.begin_weight(s, k, l);
          const double delta = g(rng);
          LatentState moved = s;
          moved.w(Eigen::Index(k), Eigen::Index(l)) += delta;
          CHECK(std::fabs(cache.weight_log_lik(delta) - data_log_likelihood(data, moved, sm, mask)) < 1e-9);
          s = moved;
          cache.commit_weight(delta);
        }
      }
      CHECK(std::fabs(cache.log_lik() - data_log_likelihood(data, s, sm, mask)) < 1e-9);
      CHECK((cache.proj_wz() - s.w * s.z).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((cache.proj_wtz() - s.w.transpose() * s.z).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("cache handles large counts and large bilinear values") {
  std::mt19937_64 rng(2);
  CountMatrix data(4, false);
  data.set({0, 1}, 1e6);
  data.set({2, 3}, 1);
  LatentState s = random_state(2, 4, rng);
  s.w *= 20.0;
  const SmoothingScheme sm = SmoothingScheme::from_training(data, 1.0);
  BilinearCache cache(data, sm);
  cache.rebuild(s);
  const double scratch = data_log_likelihood(data, s, sm);
  CHECK(std::fabs(cache.log_lik() - scratch) <= 1e-9 * std::max(1.0, std::fabs(scratch)));
}

TEST_CASE("vector kernels match the scalar reference") {
  const simd::KernelTable& ref = simd::scalar_kernels();
  const simd::KernelTable* wide = simd::avx2_kernels();
  if (wide == nullptr) {
    MESSAGE("no vectorized kernels on this machine; comparing the reference with itself");
    wide = &ref;
  }
  std::mt19937_64 rng(3);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 1001u}) {
    for (double scale : {0.5, 5.0, 40.0, 800.0}) {
      const auto x = random_vector(n, scale, rng);
      const auto c = random_vector(n, 1.0, rng);
      const double delta = 0.37 * scale;
      double magnitude = 0.0;
      for (std::size_t i = 0; i < n; ++i) magnitude += std::fabs(x[i]) + std::fabs(delta * c[i]) + 1.0;
      const double tol = 1e-14 * magnitude + 1e-300;

      CHECK(std::fabs(ref.softplus_sum(x.data(), n) - wide->softplus_sum(x.data(), n)) <= tol);
      CHECK(std::fabs(ref.softplus_axpy_sum(x.data(), c.data(), delta, n) -
                      wide->softplus_axpy_sum(x.data(), c.data(), delta, n)) <= tol);
      std::vector<double> a(n), b(n);
      ref.softplus_axpy(x.data(), c.data(), delta, a.data(), n);
      wide->softplus_axpy(x.data(), c.data(), delta, b.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        const double arg_scale = std::fabs(x[i]) + std::fabs(delta * c[i]);
        CHECK(std::fabs(a[i] - b[i]) <= 4e-16 * std::max(1.0, std::fabs(a[i])) + 2.3e-16 * arg_scale + 1e-300);
        CHECK(b[i] >= 0.0);
      }
      if (n > 0) {
        CHECK(std::fabs(ref.abs_diff_sum(x.data(), x[0], n) - wide->abs_diff_sum(x.data(), x[0], n)) <= tol);
        const auto rx = random_vector(n, 1.0, rng);
        const auto ry = random_vector(n, 1.0, rng);
        const double r = ref.centered_dot(x.data(), rx.data(), x[0], 0.3, c.data(), ry.data(), c[0], -0.2, n);
        const double v = wide->centered_dot(x.data(), rx.data(), x[0], 0.3, c.data(), ry.data(), c[0], -0.2, n);
        CHECK(std::fabs(r - v) <= 1e-13 * (1.0 + std::fabs(r)) * double(n));
      }
    }
  }
}

TEST_CASE("vectorized softplus at special points") {
  const simd::KernelTable* wide = simd::avx2_kernels();
  if (wide == nullptr) return;
  const std::vector<double> pts{-1000, -745, -708.5, -700, -40, -30, -1e-300, 0, 1e-300, 1e-8,
                                29.999, 30, 30.001, 36.9, 37.1, 700, 1000, 1e300};
  for (double x : pts) {
    double out = 0;
    const double zero = 0;
    wide->softplus_axpy(&x, &zero, 0.0, &out, 1);
    const double expect = x > 30 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    CHECK(std::fabs(out - expect) <= 4e-16 * std::max(1.0, expect) + 1e-300);
  }
}

TEST_CASE("active kernel table is one of the known variants") {
  const auto name = simd::active_kernels().name;
  CHECK((name == simd::scalar_kernels().name ||
         (simd::avx2_kernels() != nullptr && name == simd::avx2_kernels()->name)));
}
