#include "impact/models.hpp"

#include <cmath>
#include <string>

#include "impact/errors.hpp"
#include "impact/gaussian.hpp"
#include "impact/linalg.hpp"

namespace impact {

// --- Bachelier ---------------------------------------------------------------

namespace {

void check_bachelier(const BachelierSpec& spec) {
  const int d = spec.f.rows();
  if (spec.f.cols() != 1 || spec.g.cols() != 1)
    throw ConfigError("bachelier: f and g must be vector-valued");
  if (spec.g.rows() != d || spec.psi.rows() != d || spec.psi.cols() != d)
    throw ConfigError("bachelier: inconsistent dimensions");
  if (spec.y && (spec.y->rows() != d || spec.y->cols() != 1))
    throw ConfigError("bachelier: claim integrand dimension mismatch");
}

}  // namespace

double BachelierSpec::validate() const {
  check_bachelier(*this);
  double worst_cond = 0.0;
  for (int k = 0; k < psi.intervals(); ++k) {
    const auto block = psi.value(k);
    const LuFactor lu = lu_factor(block, dim());
    if (lu.singular || lu.min_pivot < 1e-13 * std::max(1.0, lu.max_pivot))
      throw ConfigError("bachelier: psi is singular on interval " +
                        std::to_string(k));
    const auto inv = lu_inverse(lu);
    worst_cond = std::max(worst_cond,
                          one_norm(block, dim()) * one_norm(inv, dim()));
  }
  return worst_cond;
}

PayoffExpr BachelierSpec::sigma0() const { return PayoffExpr::stoch_integral(f); }
PayoffExpr BachelierSpec::sigma1() const { return PayoffExpr::stoch_integral(g); }

std::vector<PayoffExpr> BachelierSpec::assets() const {
  std::vector<PayoffExpr> out;
  out.reserve(dim());
  for (int j = 0; j < dim(); ++j)
    out.push_back(PayoffExpr::stoch_integral(psi.column(j)));
  return out;
}

PayoffExpr BachelierSpec::claim() const {
  if (!y) throw ConfigError("bachelier: no claim integrand configured");
  return PayoffExpr::stoch_integral(*y);
}

std::vector<double> bachelier_H(const BachelierSpec& spec, double gamma,
                                double t, std::span<const double> q) {
  const int d = spec.dim();
  const auto ft = spec.f.value_at(t);
  const auto psit = spec.psi.value_at(t);
  std::vector<double> out(d);
  for (int i = 0; i < d; ++i) {
    double s = ft[i];
    for (int j = 0; j < d; ++j) s += psit[i * d + j] * q[j];
    out[i] = -gamma * s;
  }
  return out;
}

std::vector<double> bachelier_demand_for_strategy(const BachelierSpec& spec,
                                                  double gamma, double t,
                                                  std::span<const double> pi) {
  const int d = spec.dim();
  const auto psit = spec.psi.value_at(t);
  const LuFactor lu = lu_factor(psit, d);
  if (lu.singular) throw SolverError("bachelier: singular psi");
  std::vector<double> rhs(pi.begin(), pi.end()), out(d);
  lu_solve(lu, rhs, out);
  for (int i = 0; i < d; ++i) out[i] /= -gamma;
  return out;
}

StepFunction bachelier_optimal_strategy(const BachelierSpec& spec, double gamma,
                                        double alpha) {
  check_bachelier(spec);
  const int d = spec.dim();
  const StepFunction fg = linear_combine(-gamma, spec.f, alpha, spec.g);
  const std::vector<double> nodes = merge_breakpoints(fg, spec.psi.column(0));
  const int n = static_cast<int>(nodes.size()) - 1;
  std::vector<double> data(static_cast<std::size_t>(n) * d);
  for (int k = 0; k < n; ++k) {
    const double t = nodes[k];
    const auto rhs_v = fg.value_at(t);
    const auto psit = spec.psi.value_at(t);
    const LuFactor lu = lu_factor(psit, d);
    if (lu.singular) throw SolverError("bachelier: singular psi");
    std::vector<double> sol(d);
    lu_solve(lu, rhs_v, sol);
    for (int i = 0; i < d; ++i)
      data[static_cast<std::size_t>(k) * d + i] = sol[i] / (alpha + gamma);
  }
  return StepFunction(TimeGrid::from_nodes(nodes), d, 1, std::move(data));
}

bool bachelier_exact_arbitrage_case(const BachelierSpec& spec, double gamma,
                                    double alpha, double u, double tol) {
  if (!spec.y) return false;
  // gamma f + gamma u y - alpha g == 0 in L2
  const StepFunction a = linear_combine(gamma, spec.f, gamma * u, *spec.y);
  const StepFunction residual = linear_combine(1.0, a, -alpha, spec.g);
  return integral_sq(residual) < tol;
}

BachelierHProvider::BachelierHProvider(BachelierSpec spec, double gamma)
    : spec_(std::move(spec)), gamma_(gamma) {
  spec_.validate();
}

void BachelierHProvider::eval(double t, std::span<const double>,
                              std::span<const double> q,
                              std::span<double> out) const {
  const int d = spec_.dim();
  const auto ft = spec_.f.value_at(t);
  const auto psit = spec_.psi.value_at(t);
  for (int i = 0; i < d; ++i) {
    double s = ft[i];
    for (int j = 0; j < d; ++j) s += psit[i * d + j] * q[j];
    out[i] = -gamma_ * s;
  }
}

// --- digital -----------------------------------------------------------------

namespace {

double digital_tau(const DigitalSpec& spec, double t) {
  const double tau = spec.horizon - t;
  if (tau <= 0.0) throw ConfigError("digital: needs t < T");
  return tau;
}

}  // namespace

double digital_v(const DigitalSpec& spec, double t, double b, double q) {
  const double tau = digital_tau(spec, t);
  const double c = b / std::sqrt(tau);
  // -log( Phi(-c) + Phi(c) e^{-gamma q} ), evaluated on the stable side
  const double gq = spec.gamma * q;
  if (gq >= 0.0)
    return -std::log(norm_cdf(-c) + norm_cdf(c) * std::exp(-gq));
  return gq - std::log(norm_cdf(-c) * std::exp(gq) + norm_cdf(c));
}

double digital_H(const DigitalSpec& spec, double t, double b, double q) {
  const double tau = digital_tau(spec, t);
  const double sq = std::sqrt(tau);
  const double c = b / sq;
  const double gq = spec.gamma * q;
  const double pdf = norm_pdf(c) / sq;
  if (gq >= 0.0) {
    const double e = std::exp(-gq);
    return -pdf * (1.0 - e) / (norm_cdf(-c) + norm_cdf(c) * e);
  }
  const double e = std::exp(gq);  // < 1
  return -pdf * (e - 1.0) / (norm_cdf(-c) * e + norm_cdf(c));
}

Interval digital_constraint_interval(const DigitalSpec& spec, double t,
                                     double b) {
  const double tau = digital_tau(spec, t);
  const double sq = std::sqrt(tau);
  const double c = b / sq;
  const double pdf = norm_pdf(c) / sq;
  Interval iv;
  iv.lo = -pdf / norm_cdf(-c);  // q -> +inf
  iv.hi = pdf / norm_cdf(c);    // q -> -inf
  return iv;
}

// --- two-dimensional digital + linear claim ----------------------------------

Membership twod_region_membership(const TwoDDigitalSpec& spec, double p1,
                                  double p2) {
  const double tau = spec.horizon - spec.t;
  if (tau <= 0.0) throw ConfigError("twod: needs t < T");
  const double c2 = -spec.b2 / std::sqrt(tau);
  const double a = norm_cdf(c2);
  const double cc = std::sqrt(tau) / norm_pdf(c2);
  Membership m;
  const double hi = 1.0 / (a * cc);
  const double lo = -1.0 / ((1.0 - a) * cc);
  const double denom = 1.0 - a * cc * p2;
  const double numer = 1.0 + (1.0 - a) * cc * p2;
  const double eps = 1e-12;
  if (std::abs(p2 - hi) <= eps * (1.0 + std::abs(hi)) ||
      std::abs(p2 - lo) <= eps * (1.0 + std::abs(lo))) {
    m.boundary_flag = true;
    return m;
  }
  if (!(p2 > lo && p2 < hi)) return m;
  const double rhs = 2.0 * tau * (1.0 - 2.0 * denom * (1.0 - a)) *
                     std::log(numer / denom);
  const double lhs = tau * p1 - spec.b1;
  m.in_region = lhs * lhs >= rhs;  // the set is closed: equality is a member
  return m;
}

Interval twod_p2_band(const TwoDDigitalSpec& spec) {
  const double tau = spec.horizon - spec.t;
  if (tau <= 0.0) throw ConfigError("twod: needs t < T");
  const double c2 = -spec.b2 / std::sqrt(tau);
  const double a = norm_cdf(c2);
  const double cc = std::sqrt(tau) / norm_pdf(c2);
  return {-1.0 / ((1.0 - a) * cc), 1.0 / (a * cc)};
}

Raster region_raster(const TwoDDigitalSpec& spec, double p1_lo, double p1_hi,
                     double p2_lo, double p2_hi, int res1, int res2,
                     ExecMode exec) {
  if (res1 < 2 || res2 < 2)
    throw ConfigError("region raster: resolution must be >= 2 per axis");
  Raster raster;
  raster.p1.resize(res1);
  raster.p2.resize(res2);
  for (int i = 0; i < res1; ++i)
    raster.p1[i] = p1_lo + (p1_hi - p1_lo) * i / (res1 - 1);
  for (int j = 0; j < res2; ++j)
    raster.p2[j] = p2_lo + (p2_hi - p2_lo) * j / (res2 - 1);
  raster.in_region.assign(static_cast<std::size_t>(res1) * res2, 0);
  for_each_chunk(static_cast<std::int64_t>(res1) * res2, exec,
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t cell = lo; cell < hi; ++cell) {
                     const int j = static_cast<int>(cell / res1);
                     const int i = static_cast<int>(cell % res1);
                     raster.in_region[cell] =
                         twod_region_membership(spec, raster.p1[i], raster.p2[j])
                                 .in_region
                             ? 1
                             : 0;
                   }
                 });
  return raster;
}

}  // namespace impact
