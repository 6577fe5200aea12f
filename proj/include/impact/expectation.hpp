#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "impact/parallel.hpp"
#include "impact/payoff_expr.hpp"
#include "impact/time_grid.hpp"

namespace impact {

enum class Method { Quadrature, MonteCarlo };

// Evaluator for E[.]: Gauss-Hermite tensor quadrature over the expression's
// Gaussian basis (rank <= max_quad_dim) or seeded Monte Carlo with one
// counter-based stream per path. Immutable once configured; evaluation is
// read-only and safe to call from many threads.
struct ExpectationEngine {
  Method method = Method::Quadrature;
  int quad_nodes = 64;       // per dimension
  int max_quad_dim = 3;
  std::int64_t mc_paths = 100000;
  std::uint64_t seed = 0;
  double abs_tol = 1e-9;
  ExecMode exec = ExecMode::Parallel;

  ExpectationEngine with_method(Method m) const {
    ExpectationEngine e = *this;
    e.method = m;
    return e;
  }
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for quadrature
};

double expect(const ExpectationEngine& engine, const PayoffExpr& expr);
Estimate expect_estimate(const ExpectationEngine& engine, const PayoffExpr& expr);

// log E[exp(expr)] in shifted (log-sum-exp) form
double log_expect_exp(const ExpectationEngine& engine, const PayoffExpr& expr);
Estimate log_expect_exp_estimate(const ExpectationEngine& engine,
                                 const PayoffExpr& expr);

// E[numerator * e^tilt] / E[e^tilt], both evaluated on shared nodes/samples
double tilted_expect(const ExpectationEngine& engine, const PayoffExpr& numerator,
                     const PayoffExpr& tilt);

// Variance under the engine's measure (shared samples for both moments).
double variance(const ExpectationEngine& engine, const PayoffExpr& expr);

// Empirical range of expr over the engine's support plus an inflated probe;
// a side whose extreme keeps growing under the probe is flagged unbounded.
struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_unbounded = false;
  bool hi_unbounded = false;
};
ValueRange value_range(const ExpectationEngine& engine, const PayoffExpr& expr);

// Brownian increments on a grid: paths x steps x dim, variance dt per step,
// reproducible by (seed, path index) independent of partitioning.
struct PathArray {
  TimeGrid grid;
  int dim = 0;
  std::int64_t paths = 0;
  std::vector<double> increments;  // path-major, then step, then coordinate

  std::span<const double> path(std::int64_t p) const {
    const std::size_t stride =
        static_cast<std::size_t>(grid.n_steps()) * dim;
    return {increments.data() + stride * p, stride};
  }
};

PathArray sample_paths(const TimeGrid& grid, int dim, std::int64_t paths,
                       std::uint64_t seed, ExecMode exec = ExecMode::Parallel);

// Evaluates expressions on a realized path: stochastic integrals accumulate
// phi(t)' dB exactly on aligned grids, Z comes from the terminal state.
class PathExprEvaluator {
 public:
  PathExprEvaluator(std::span<const PayoffExpr> exprs, const TimeGrid& grid,
                    int dim);

  int expr_count() const { return static_cast<int>(exprs_.size()); }

  // increments: one path, steps x dim row-major
  void eval(std::span<const double> increments, std::span<double> out) const;

 private:
  std::vector<PayoffExpr> exprs_;
  GaussianBasis basis_;
  TimeGrid grid_;
  int dim_;
  // per integral leaf, per step: integrand value (dim_ entries, zero padded)
  std::vector<double> integrand_table_;
};

}  // namespace impact
