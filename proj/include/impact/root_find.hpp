#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "impact/errors.hpp"

namespace impact {

struct RootResult {
  double x = 0.0;
  double residual = 0.0;  // f(x) - target
  int iterations = 0;
};

// Root of f(x) = target for strictly decreasing f: geometric bracket expansion
// from x0 (factor 2, up to 2^60 times the initial step), then bisection until
// the residual is within tol or the bracket is exhausted.
inline RootResult solve_decreasing(const std::function<double(double)>& f,
                                   double target, double x0, double tol,
                                   double initial_step = 1.0) {
  RootResult result;
  double f0 = f(x0);
  if (std::abs(f0 - target) <= tol) {
    result.x = x0;
    result.residual = f0 - target;
    return result;
  }
  double lo, hi, f_lo, f_hi;
  double step = initial_step;
  if (f0 > target) {
    // root lies to the right
    lo = x0;
    f_lo = f0;
    hi = x0 + step;
    f_hi = f(hi);
    int k = 0;
    while (f_hi > target) {
      if (++k > 60)
        throw SolverError("root bracketing failed upward; last bracket [" +
                          std::to_string(lo) + ", " + std::to_string(hi) +
                          "], f(hi)-target = " + std::to_string(f_hi - target));
      lo = hi;
      f_lo = f_hi;
      step *= 2.0;
      hi += step;
      f_hi = f(hi);
    }
  } else {
    hi = x0;
    f_hi = f0;
    lo = x0 - step;
    f_lo = f(lo);
    int k = 0;
    while (f_lo < target) {
      if (++k > 60)
        throw SolverError("root bracketing failed downward; last bracket [" +
                          std::to_string(lo) + ", " + std::to_string(hi) +
                          "], f(lo)-target = " + std::to_string(f_lo - target));
      hi = lo;
      f_hi = f_lo;
      step *= 2.0;
      lo -= step;
      f_lo = f(lo);
    }
  }
  (void)f_lo;
  (void)f_hi;
  double mid = 0.5 * (lo + hi), f_mid = 0.0;
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    ++result.iterations;
    if (std::abs(f_mid - target) <= tol) break;
    if (hi - lo <= 1e-15 * (1.0 + std::abs(mid))) break;
    if (f_mid > target)
      lo = mid;
    else
      hi = mid;
  }
  result.x = mid;
  result.residual = f_mid - target;
  if (std::abs(result.residual) > 100.0 * tol)
    throw SolverError("bisection stalled: residual " +
                      std::to_string(result.residual) + " on bracket [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return result;
}

}  // namespace impact
