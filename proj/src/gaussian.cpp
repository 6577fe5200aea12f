#include "impact/gaussian.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace impact {

namespace {

// Roots of the physicists' Hermite polynomial by Newton iteration on the
// orthonormal recurrence, asymptotic initial guesses for the large roots.
QuadRule build_rule(int n) {
  if (n < 1) throw std::invalid_argument("quadrature nodes must be >= 1");
  const long double pim4 = 0.7511255444649424828587030047762276930524L;
  std::vector<long double> x(n), w(n);
  const int m = (n + 1) / 2;
  long double z = 0.0L;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0L * n + 1.0L) -
          1.85575L * std::pow(2.0L * n + 1.0L, -1.0L / 6.0L);
    } else if (i == 1) {
      z -= 1.14L * std::pow(static_cast<long double>(n), 0.426L) / z;
    } else if (i == 2) {
      z = 1.86L * z - 0.86L * x[0];
    } else if (i == 3) {
      z = 1.91L * z - 0.91L * x[1];
    } else {
      z = 2.0L * z - x[i - 2];
    }
    long double pp = 0.0L;
    for (int it = 0; it < 200; ++it) {
      long double p1 = pim4, p2 = 0.0L;
      for (int j = 1; j <= n; ++j) {
        const long double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0L / j) * p2 -
             std::sqrt(static_cast<long double>(j - 1) / j) * p3;
      }
      pp = std::sqrt(2.0L * n) * p2;
      const long double step = p1 / pp;
      z -= step;
      if (std::abs(step) <= 1e-20L * (1.0L + std::abs(z))) break;
    }
    x[i] = z;            // descending positive roots
    x[n - 1 - i] = -z;
    w[i] = 2.0L / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  QuadRule rule;
  rule.z.resize(n);
  rule.w.resize(n);
  long double wsum = 0.0L;
  for (int i = 0; i < n; ++i) wsum += w[i];
  for (int i = 0; i < n; ++i) {
    // physicists' x -> standard-normal node sqrt(2) x, weights sum to 1
    rule.z[i] = static_cast<double>(-x[i] * 1.4142135623730950488016887L);
    rule.w[i] = static_cast<double>(w[i] / wsum);
  }
  // enforce exact antisymmetry of nodes and symmetry of weights
  for (int i = 0; i < n / 2; ++i) {
    rule.z[n - 1 - i] = -rule.z[i];
    rule.w[n - 1 - i] = rule.w[i];
  }
  if (n % 2 == 1) rule.z[n / 2] = 0.0;
  return rule;
}

}  // namespace

const QuadRule& gauss_hermite_normalized(int n) {
  static std::map<int, QuadRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

}  // namespace impact
