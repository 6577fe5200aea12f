#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace impact {

// Fixed-order pairwise summation: deterministic for a given array regardless
// of thread count, and more accurate than a running sum.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

template <class F>
double pairwise_sum_indexed(std::int64_t lo, std::int64_t hi, F&& f) {
  if (hi - lo <= 32) {
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const std::int64_t mid = lo + (hi - lo) / 2;
  return pairwise_sum_indexed(lo, mid, f) + pairwise_sum_indexed(mid, hi, f);
}

inline double max_value(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

// log(sum_i exp(v_i)) in shifted form.
inline double log_sum_exp(std::span<const double> v) {
  const double m = max_value(v);
  if (!std::isfinite(m)) return m;
  const double s = pairwise_sum_indexed(
      0, static_cast<std::int64_t>(v.size()),
      [&](std::int64_t i) { return std::exp(v[i] - m); });
  return m + std::log(s);
}

// log(sum_i w_i exp(v_i)), w_i >= 0.
inline double log_sum_exp_weighted(std::span<const double> v,
                                   std::span<const double> w) {
  const double m = max_value(v);
  if (!std::isfinite(m)) return m;
  const double s = pairwise_sum_indexed(
      0, static_cast<std::int64_t>(v.size()),
      [&](std::int64_t i) { return w[i] * std::exp(v[i] - m); });
  return m + std::log(s);
}

// log((1/n) sum_i exp(v_i)).
inline double log_mean_exp(std::span<const double> v) {
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  const double ss = pairwise_sum_indexed(
      0, static_cast<std::int64_t>(v.size()),
      [&](std::int64_t i) { return (v[i] - mu) * (v[i] - mu); });
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace impact
