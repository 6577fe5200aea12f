#include "impact/expectation.hpp"

#include <cmath>
#include <string>

#include "impact/errors.hpp"
#include "impact/gaussian.hpp"
#include "impact/numeric.hpp"
#include "impact/rng.hpp"

namespace impact {

namespace {

constexpr const char* kOverflowHint =
    "non-finite evaluation; use log_expect_exp or reduce the position/aversion";

struct Batch {
  std::vector<std::vector<double>> values;  // one array per expression
  std::vector<double> weights;              // empty => uniform 1/n
  std::int64_t n = 0;
};

// Shared-node evaluation of several expressions over one Gaussian basis.
Batch evaluate_batch(const ExpectationEngine& engine,
                     std::span<const PayoffExpr> exprs) {
  const GaussianBasis basis = GaussianBasis::build(exprs);
  const int r = basis.rank();
  const int m = basis.coord_count();
  Batch batch;
  batch.values.resize(exprs.size());

  if (engine.method == Method::Quadrature) {
    if (r > engine.max_quad_dim)
      throw UnsupportedError(
          "quadrature supports expressions over at most " +
          std::to_string(engine.max_quad_dim) +
          " independent Gaussian dimensions (expression needs " +
          std::to_string(r) + "); use the monte-carlo method");
    if (engine.quad_nodes < 1)
      throw ConfigError("engine: quadrature nodes must be >= 1");
    const QuadRule& rule = gauss_hermite_normalized(engine.quad_nodes);
    std::int64_t n = 1;
    for (int k = 0; k < r; ++k) {
      n *= engine.quad_nodes;
      if (n > (std::int64_t{1} << 26))
        throw UnsupportedError("quadrature tensor grid too large");
    }
    batch.n = n;
    batch.weights.resize(n);
    for (auto& v : batch.values) v.resize(n);
    for_each_chunk(n, engine.exec, [&](std::int64_t lo, std::int64_t hi) {
      std::vector<double> xi(r), coords(m);
      for (std::int64_t i = lo; i < hi; ++i) {
        std::int64_t rest = i;
        double w = 1.0;
        for (int k = 0; k < r; ++k) {
          const int digit = static_cast<int>(rest % engine.quad_nodes);
          rest /= engine.quad_nodes;
          xi[k] = rule.z[digit];
          w *= rule.w[digit];
        }
        basis.transform(xi, coords);
        batch.weights[i] = w;
        for (std::size_t e = 0; e < exprs.size(); ++e) {
          const double v = basis.eval(exprs[e], coords);
          if (!std::isfinite(v)) throw OverflowError(kOverflowHint);
          batch.values[e][i] = v;
        }
      }
    });
    return batch;
  }

  // Monte Carlo
  if (engine.mc_paths < 1) throw ConfigError("engine: mc paths must be >= 1");
  const std::int64_t n = engine.mc_paths;
  batch.n = n;
  for (auto& v : batch.values) v.resize(n);
  for_each_chunk(n, engine.exec, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> xi(r), coords(m);
    for (std::int64_t i = lo; i < hi; ++i) {
      PathRng rng(engine.seed, static_cast<std::uint64_t>(i));
      for (int k = 0; k < r; ++k) xi[k] = rng.normal();
      basis.transform(xi, coords);
      for (std::size_t e = 0; e < exprs.size(); ++e) {
        const double v = basis.eval(exprs[e], coords);
        if (!std::isfinite(v)) throw OverflowError(kOverflowHint);
        batch.values[e][i] = v;
      }
    }
  });
  return batch;
}

// Normalizing by the summed weights (instead of trusting them to add to 1)
// makes tilted_expect with zero tilt coincide with expect bit-for-bit.
double weighted_mean(const Batch& batch, int e) {
  const auto& v = batch.values[e];
  if (batch.weights.empty()) return mean(v);
  const double num = pairwise_sum_indexed(
      0, batch.n, [&](std::int64_t i) { return batch.weights[i] * v[i]; });
  const double den = pairwise_sum(batch.weights);
  return num / den;
}

}  // namespace

double expect(const ExpectationEngine& engine, const PayoffExpr& expr) {
  return expect_estimate(engine, expr).value;
}

Estimate expect_estimate(const ExpectationEngine& engine,
                         const PayoffExpr& expr) {
  const Batch batch = evaluate_batch(engine, {&expr, 1});
  Estimate est;
  est.value = weighted_mean(batch, 0);
  if (engine.method == Method::MonteCarlo && batch.n > 1) {
    const double var = sample_variance(batch.values[0]);
    est.std_error = std::sqrt(var / static_cast<double>(batch.n));
  }
  return est;
}

double log_expect_exp(const ExpectationEngine& engine, const PayoffExpr& expr) {
  return log_expect_exp_estimate(engine, expr).value;
}

Estimate log_expect_exp_estimate(const ExpectationEngine& engine,
                                 const PayoffExpr& expr) {
  const Batch batch = evaluate_batch(engine, {&expr, 1});
  const auto& v = batch.values[0];
  Estimate est;
  if (batch.weights.empty()) {
    est.value = log_mean_exp(v);
    if (batch.n > 1) {
      // delta method on the shifted mean
      const double m = max_value(v);
      std::vector<double> shifted(v.size());
      for (std::size_t i = 0; i < v.size(); ++i)
        shifted[i] = std::exp(v[i] - m);
      const double mu = mean(shifted);
      const double var = sample_variance(shifted);
      est.std_error =
          std::sqrt(var / static_cast<double>(batch.n)) / std::max(mu, 1e-300);
    }
  } else {
    est.value = log_sum_exp_weighted(v, batch.weights) -
                std::log(pairwise_sum(batch.weights));
  }
  if (!std::isfinite(est.value)) throw OverflowError(kOverflowHint);
  return est;
}

double tilted_expect(const ExpectationEngine& engine,
                     const PayoffExpr& numerator, const PayoffExpr& tilt) {
  const PayoffExpr exprs[2] = {numerator, tilt};
  const Batch batch = evaluate_batch(engine, exprs);
  const auto& num = batch.values[0];
  const auto& til = batch.values[1];
  const double m = max_value(til);
  const bool uniform = batch.weights.empty();
  const double den = pairwise_sum_indexed(0, batch.n, [&](std::int64_t i) {
    const double w = uniform ? 1.0 : batch.weights[i];
    return w * std::exp(til[i] - m);
  });
  const double top = pairwise_sum_indexed(0, batch.n, [&](std::int64_t i) {
    const double w = uniform ? 1.0 : batch.weights[i];
    return w * num[i] * std::exp(til[i] - m);
  });
  if (den <= 0.0 || !std::isfinite(den) || !std::isfinite(top))
    throw OverflowError(kOverflowHint);
  return top / den;
}

double variance(const ExpectationEngine& engine, const PayoffExpr& expr) {
  const Batch batch = evaluate_batch(engine, {&expr, 1});
  const double mu = weighted_mean(batch, 0);
  const auto& v = batch.values[0];
  if (batch.weights.empty()) {
    return pairwise_sum_indexed(0, batch.n, [&](std::int64_t i) {
             return (v[i] - mu) * (v[i] - mu);
           }) /
           static_cast<double>(batch.n);
  }
  return pairwise_sum_indexed(0, batch.n,
                              [&](std::int64_t i) {
                                return batch.weights[i] * (v[i] - mu) *
                                       (v[i] - mu);
                              }) /
         pairwise_sum(batch.weights);
}

ValueRange value_range(const ExpectationEngine& engine, const PayoffExpr& expr) {
  const GaussianBasis basis = GaussianBasis::build(expr);
  const int r = basis.rank();
  const int m = basis.coord_count();
  ValueRange range;
  auto scan = [&](double scale, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    if (r == 0) {
      std::vector<double> coords(m, 0.0);
      const double v = basis.eval(expr, coords);
      lo = hi = v;
      return;
    }
    const int probe_nodes = 32;
    const QuadRule& rule = gauss_hermite_normalized(probe_nodes);
    std::int64_t n = 1;
    for (int k = 0; k < r && k < 3; ++k) n *= probe_nodes;
    std::vector<double> xi(r, 0.0), coords(m);
    if (r <= 3) {
      for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t rest = i;
        for (int k = 0; k < r; ++k) {
          xi[k] = scale * rule.z[rest % probe_nodes];
          rest /= probe_nodes;
        }
        basis.transform(xi, coords);
        const double v = basis.eval(expr, coords);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    } else {
      PathRng rng(engine.seed ^ 0x5ca1ab1eULL, 0);
      for (int i = 0; i < 20000; ++i) {
        for (int k = 0; k < r; ++k) xi[k] = scale * rng.normal();
        basis.transform(xi, coords);
        const double v = basis.eval(expr, coords);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  };
  double lo1, hi1, lo2, hi2;
  scan(1.0, lo1, hi1);
  scan(2.5, lo2, hi2);
  range.lo = std::min(lo1, lo2);
  range.hi = std::max(hi1, hi2);
  range.hi_unbounded = hi2 > hi1 + 1e-6 * (1.0 + std::abs(hi1));
  range.lo_unbounded = lo2 < lo1 - 1e-6 * (1.0 + std::abs(lo1));
  return range;
}

PathArray sample_paths(const TimeGrid& grid, int dim, std::int64_t paths,
                       std::uint64_t seed, ExecMode exec) {
  if (dim < 1) throw ConfigError("sample_paths: dimension must be >= 1");
  if (paths < 1) throw ConfigError("sample_paths: need at least one path");
  PathArray out{grid, dim, paths, {}};
  const int steps = grid.n_steps();
  out.increments.resize(static_cast<std::size_t>(paths) * steps * dim);
  std::vector<double> sqrt_dt(steps);
  for (int s = 0; s < steps; ++s) sqrt_dt[s] = std::sqrt(grid.dt(s));
  for_each_chunk(paths, exec, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      PathRng rng(seed, static_cast<std::uint64_t>(p));
      double* row =
          out.increments.data() + static_cast<std::size_t>(p) * steps * dim;
      for (int s = 0; s < steps; ++s)
        for (int c = 0; c < dim; ++c) row[s * dim + c] = rng.normal() * sqrt_dt[s];
    }
  });
  return out;
}

PathExprEvaluator::PathExprEvaluator(std::span<const PayoffExpr> exprs,
                                     const TimeGrid& grid, int dim)
    : exprs_(exprs.begin(), exprs.end()),
      basis_(GaussianBasis::build(exprs)),
      grid_(grid),
      dim_(dim) {
  if (basis_.z_dim() > dim_)
    throw ConfigError("path evaluator: expression references more Brownian "
                      "coordinates than the simulation provides");
  if (basis_.integral_count() > 0 || basis_.z_dim() > 0) {
    const double t = basis_.horizon();
    if (t > 0.0 && std::abs(t - grid_.horizon()) > 1e-12 * std::max(1.0, t))
      throw ConfigError("path evaluator: expression horizon differs from grid");
  }
  const int steps = grid_.n_steps();
  integrand_table_.assign(
      static_cast<std::size_t>(basis_.integral_count()) * steps * dim_, 0.0);
  for (int j = 0; j < basis_.integral_count(); ++j) {
    const StepFunction& phi = basis_.integrand(j);
    for (int s = 0; s < steps; ++s) {
      const auto v = phi.value_at(grid_.node(s));
      for (int c = 0; c < phi.rows() && c < dim_; ++c)
        integrand_table_[(static_cast<std::size_t>(j) * steps + s) * dim_ + c] =
            v[c];
    }
  }
}

void PathExprEvaluator::eval(std::span<const double> increments,
                             std::span<double> out) const {
  const int steps = grid_.n_steps();
  const int zd = basis_.z_dim();
  std::vector<double> coords(basis_.coord_count(), 0.0);
  // terminal state
  if (zd > 0) {
    const double inv_sqrt_t = 1.0 / std::sqrt(grid_.horizon());
    for (int c = 0; c < zd; ++c) {
      double bt = 0.0;
      for (int s = 0; s < steps; ++s) bt += increments[s * dim_ + c];
      coords[c] = bt * inv_sqrt_t;
    }
  }
  for (int j = 0; j < basis_.integral_count(); ++j) {
    double acc = 0.0;
    const double* tab =
        integrand_table_.data() + static_cast<std::size_t>(j) * steps * dim_;
    for (int s = 0; s < steps; ++s)
      for (int c = 0; c < dim_; ++c) acc += tab[s * dim_ + c] * increments[s * dim_ + c];
    coords[zd + j] = acc;
  }
  for (std::size_t e = 0; e < exprs_.size(); ++e)
    out[e] = basis_.eval(exprs_[e], coords);
}

}  // namespace impact
