#include "countlink/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "countlink/simd/kernels.hpp"

namespace countlink {

const char* to_string(HoldoutScheme scheme) {
  return scheme == HoldoutScheme::Interactions ? "interactions" : "pairs";
}

namespace {

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("holdout: train fraction must lie in (0, 1)");
  }
}

CountMatrix empty_like(const CountMatrix& data) {
  CountMatrix out(data.n_nodes(), data.symmetric());
  out.set_labels(data.labels());
  return out;
}

}  // namespace

HoldoutSplit split_interactions(const CountMatrix& data, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  if (!data.is_integral()) throw std::invalid_argument("split_interactions: counts must be integers");
  std::mt19937_64 rng(seed);
  HoldoutSplit split{empty_like(data), empty_like(data), HoldoutScheme::Interactions, fraction};
  for (const auto& [cell, count] : data.entries()) {
    const auto units = static_cast<long long>(count);
    const long long kept = std::binomial_distribution<long long>(units, fraction)(rng);
    split.train.set(cell, static_cast<double>(kept));
    split.test.set(cell, static_cast<double>(units - kept));
  }
  return split;
}

HoldoutSplit split_pairs(const CountMatrix& data, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  const std::size_t m = data.mask_size();
  if (m < 2) throw std::invalid_argument("split_pairs: mask needs at least two cells");
  const auto held = static_cast<std::size_t>(std::floor((1.0 - fraction) * static_cast<double>(m) + 1e-9));

  std::vector<Cell> cells;
  cells.reserve(m);
  for (const auto& [cell, count] : data.entries()) cells.push_back(cell);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < held; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(cells[i], cells[pick(rng)]);
  }

  HoldoutSplit split{data, empty_like(data), HoldoutScheme::NodePairs, fraction};
  for (std::size_t i = 0; i < held; ++i) {
    split.test.set(cells[i], data.count(cells[i]));
    split.train.erase(cells[i]);
  }
  return split;
}

double sample_test_log_likelihood(const LatentState& state, const CountMatrix& test,
                                  const SmoothingScheme& smoothing) {
  if (test.mask_size() == 0) return 0.0;
  std::vector<Cell> cells;
  std::vector<double> counts;
  cells.reserve(test.mask_size());
  counts.reserve(test.mask_size());
  for (const auto& [cell, count] : test.entries()) {
    cells.push_back(cell);
    counts.push_back(count);
  }
  return dcm_log_prob(counts, dcm_alphas(state, smoothing, cells));
}

double test_log_likelihood(std::span<const Sample> samples, const CountMatrix& test,
                           const SmoothingScheme& smoothing) {
  if (samples.empty()) throw std::invalid_argument("test_log_likelihood: no samples");
  std::vector<double> per_sample;
  per_sample.reserve(samples.size());
  for (const Sample& s : samples) {
    per_sample.push_back(sample_test_log_likelihood(s.state, test, smoothing));
  }
  const double top = *std::max_element(per_sample.begin(), per_sample.end());
  double acc = 0.0;
  for (double v : per_sample) acc += std::exp(v - top);
  return top + std::log(acc) - std::log(static_cast<double>(samples.size()));
}

namespace {

// Sum over tie groups of f(group size), for a sorted range.
template <class Key, class F>
double tie_sum(const std::vector<std::size_t>& order, Key key, F f) {
  double acc = 0.0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= order.size(); ++i) {
    if (i < order.size() && key(order[i]) == key(order[i - 1])) {
      ++run;
      continue;
    }
    acc += f(static_cast<double>(run));
    run = 1;
  }
  return acc;
}

// Merge sort on keys, returning the number of inversions (strict).
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buffer,
                              std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_inversions(v, buffer, lo, mid) + count_inversions(v, buffer, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buffer[k++] = v[j++];
    } else {
      buffer[k++] = v[i++];
    }
  }
  while (i < mid) buffer[k++] = v[i++];
  while (j < hi) buffer[k++] = v[j++];
  std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(lo),
            buffer.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

KendallResult kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least two observations");
  const std::size_t n = x.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  // Pair counts are exact in 64-bit integers.
  const auto pairs = [](std::size_t t) { return static_cast<std::int64_t>(t * (t - 1) / 2); };
  std::int64_t ties_x = 0;
  std::int64_t ties_xy = 0;
  {
    std::size_t run_x = 1;
    std::size_t run_xy = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      const bool same_x = i < n && x[order[i]] == x[order[i - 1]];
      const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
      if (same_x) {
        ++run_x;
      } else {
        ties_x += pairs(run_x);
        run_x = 1;
      }
      if (same_xy) {
        ++run_xy;
      } else {
        ties_xy += pairs(run_xy);
        run_xy = 1;
      }
    }
  }

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buffer(n);
  const std::int64_t swaps = count_inversions(ys, buffer, 0, n);

  std::int64_t ties_y = 0;
  {
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && ys[i] == ys[i - 1]) {
        ++run;
      } else {
        ties_y += pairs(run);
        run = 1;
      }
    }
  }

  const std::int64_t total = pairs(n);
  const std::int64_t score = total - ties_x - ties_y + ties_xy - 2 * swaps;
  const std::int64_t untied_x = total - ties_x;
  const std::int64_t untied_y = total - ties_y;
  if (untied_x == 0 || untied_y == 0) {
    throw std::invalid_argument("kendall_tau: undefined for a constant vector");
  }
  KendallResult result;
  result.tau = static_cast<double>(score) /
               std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
  result.tau = std::clamp(result.tau, -1.0, 1.0);

  // Null variance of the score with tie corrections.
  std::vector<std::size_t> by_x(order);
  std::vector<std::size_t> by_y(n);
  std::iota(by_y.begin(), by_y.end(), std::size_t{0});
  std::sort(by_y.begin(), by_y.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  const auto kx = [&](std::size_t i) { return x[i]; };
  const auto ky = [&](std::size_t i) { return y[i]; };
  const auto t2 = [](double t) { return t * (t - 1.0); };
  const auto t3 = [](double t) { return t * (t - 1.0) * (t - 2.0); };
  const auto t5 = [](double t) { return t * (t - 1.0) * (2.0 * t + 5.0); };
  const double nd = static_cast<double>(n);
  const double v0 = nd * (nd - 1.0) * (2.0 * nd + 5.0);
  const double vt = tie_sum(by_x, kx, t5);
  const double vu = tie_sum(by_y, ky, t5);
  const double v1 = tie_sum(by_x, kx, t2) * tie_sum(by_y, ky, t2) / (2.0 * nd * (nd - 1.0));
  const double v2 = n < 3 ? 0.0
                          : tie_sum(by_x, kx, t3) * tie_sum(by_y, ky, t3) /
                                (9.0 * nd * (nd - 1.0) * (nd - 2.0));
  const double variance = (v0 - vt - vu) / 18.0 + v1 + v2;
  const double z = static_cast<double>(score) / std::sqrt(variance);
  // Clamped so extreme scores still report a positive p-value.
  result.p_value = std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)),
                              std::numeric_limits<double>::min(), 1.0);
  return result;
}

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("distance_correlation: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("distance_correlation: need at least two observations");
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  const simd::KernelTable& k = simd::active_kernels();

  std::vector<double> rx(n);
  std::vector<double> ry(n);
  for (std::size_t i = 0; i < n; ++i) {
    rx[i] = k.abs_diff_sum(x.data(), x[i], n) / nd;
    ry[i] = k.abs_diff_sum(y.data(), y[i], n) / nd;
  }
  const double gx = std::accumulate(rx.begin(), rx.end(), 0.0) / nd;
  const double gy = std::accumulate(ry.begin(), ry.end(), 0.0) / nd;

  double cov = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = rx[i] - gx;
    const double cy = ry[i] - gy;
    cov += k.centered_dot(x.data(), rx.data(), x[i], cx, y.data(), ry.data(), y[i], cy, n);
    var_x += k.centered_dot(x.data(), rx.data(), x[i], cx, x.data(), rx.data(), x[i], cx, n);
    var_y += k.centered_dot(y.data(), ry.data(), y[i], cy, y.data(), ry.data(), y[i], cy, n);
  }
  if (!(var_x > 0.0) || !(var_y > 0.0)) return 0.0;
  const double r2 = std::max(cov, 0.0) / std::sqrt(var_x * var_y);
  return std::clamp(std::sqrt(r2), 0.0, 1.0);
}

EvalReport evaluate(std::span<const Sample> samples, const HoldoutSplit& split,
                    const SmoothingScheme& smoothing) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  const CountMatrix& test = split.test;
  std::vector<Cell> cells;
  std::vector<double> empirical;
  for (const auto& [cell, count] : test.entries()) {
    cells.push_back(cell);
    empirical.push_back(count);
  }
  const double total = test.total();
  if (!(total > 0.0)) throw std::invalid_argument("evaluate: test set holds no interactions");
  for (double& e : empirical) e /= total;

  const std::vector<Cell> universe = test.universe();
  const std::vector<double> predicted = predictive_probs(samples, smoothing, cells, universe);

  EvalReport report;
  report.test_cells = cells.size();
  report.test_log_lik = test_log_likelihood(samples, test, smoothing);
  const KendallResult kt = kendall_tau(empirical, predicted);
  report.kendall_tau = kt.tau;
  report.tau_p_value = kt.p_value;
  report.dcor = distance_correlation(empirical, predicted);
  double seconds = 0.0;
  double dims = 0.0;
  for (const Sample& s : samples) {
    seconds += s.seconds_elapsed;
    dims += static_cast<double>(s.dims);
  }
  report.sec_per_sample = seconds / static_cast<double>(samples.size());
  report.mean_dims = dims / static_cast<double>(samples.size());
  return report;
}

}  // namespace countlink
