#pragma once

#include <cmath>
#include <vector>

namespace impact {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
inline constexpr double kSqrt2 = 1.4142135623730950488016887;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// erfc-based: accurate in both tails, no 1 - Phi cancellation.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Quadrature rule against the standard normal density: E[f(Z)] ~= sum w_i f(z_i),
// weights normalized to sum to 1 and nodes exactly symmetric about 0.
struct QuadRule {
  std::vector<double> z;
  std::vector<double> w;
};

const QuadRule& gauss_hermite_normalized(int n);

}  // namespace impact
