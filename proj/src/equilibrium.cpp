#include "impact/equilibrium.hpp"

#include <cmath>
#include <string>

#include "impact/errors.hpp"
#include "impact/root_find.hpp"

namespace impact {

namespace {

constexpr double kPepqResidualTol = 1e-10;
constexpr double kDegeneracyVarTol = 1e-12;

void check_shared_claim(const SegmentedMarket& market) {
  if (market.side_a.claim.node() != market.side_b.claim.node())
    throw ConfigError("segmented market: both sides must share the claim h");
}

}  // namespace

double degeneracy_witness_variance(const SegmentedMarket& market) {
  const PayoffExpr diff =
      market.side_a.beta() *
          (market.side_a.maker.endowment + market.side_a.investor.endowment) -
      market.side_b.beta() *
          (market.side_b.maker.endowment + market.side_b.investor.endowment);
  return variance(market.side_a.engine, diff);
}

PepqResult solve_pepq(const SegmentedMarket& market) {
  check_shared_claim(market);
  if (degeneracy_witness_variance(market) < kDegeneracyVarTol)
    throw SolverError(
        "pepq: degenerate market, beta_A(S0+S1) - beta_B(S0+S1) is constant "
        "(uniqueness hypothesis violated)");
  // m_A(u) decreasing, m_B(-u) increasing, so the difference is decreasing
  const auto gap = [&](double u) {
    return tilted_marginal(market.side_a, u) -
           tilted_marginal(market.side_b, -u);
  };
  const RootResult root = solve_decreasing(gap, 0.0, 0.0, kPepqResidualTol);
  PepqResult result;
  result.u_star = root.x;
  const double m_a = tilted_marginal(market.side_a, root.x);
  const double m_b = tilted_marginal(market.side_b, -root.x);
  result.p_star = 0.5 * (m_a + m_b);
  result.residual_a = m_a - result.p_star;
  result.residual_b = m_b - result.p_star;
  return result;
}

PepqResult bachelier_pepq(const BachelierSide& a, const BachelierSide& b) {
  if (!a.spec.y || !b.spec.y)
    throw ConfigError("bachelier pepq: both sides need the claim integrand y");
  const double y_sq = integral_sq(*a.spec.y);
  if (y_sq <= 0.0) throw ConfigError("bachelier pepq: y must not vanish");
  const StepFunction fg_a = linear_combine(1.0, a.spec.f, 1.0, a.spec.g);
  const StepFunction fg_b = linear_combine(1.0, b.spec.f, 1.0, b.spec.g);
  const double beta_a = a.beta(), beta_b = b.beta();
  const double num = beta_b * integral_dot(fg_b, *b.spec.y) -
                     beta_a * integral_dot(fg_a, *a.spec.y);
  PepqResult result;
  result.u_star = num / ((beta_a + beta_b) * y_sq);
  const double inv_gamma_agg =
      1.0 / a.alpha + 1.0 / b.alpha + 1.0 / a.gamma + 1.0 / b.gamma;
  result.p_star = -(integral_dot(fg_a, *a.spec.y) +
                    integral_dot(fg_b, *b.spec.y)) /
                  inv_gamma_agg;
  return result;
}

SegmentedMarket bachelier_segmented_market(const BachelierSide& a,
                                           const BachelierSide& b,
                                           const ExpectationEngine& engine) {
  if (!a.spec.y) throw ConfigError("bachelier pepq: side A needs y");
  const PayoffExpr h = a.spec.claim();
  SegmentedMarket market{
      ClaimSetup{MakerSpec{a.gamma, a.spec.sigma0(), a.spec.assets()},
                 InvestorSpec{a.alpha, a.spec.sigma1()}, h, engine},
      ClaimSetup{MakerSpec{b.gamma, b.spec.sigma0(), b.spec.assets()},
                 InvestorSpec{b.alpha, b.spec.sigma1()}, h, engine}};
  return market;
}

double limit_price(const ExpectationEngine& engine, const PayoffExpr& h,
                   double ell, const std::optional<PayoffExpr>& gamma_sigma0) {
  const PayoffExpr tilt =
      gamma_sigma0 ? -1.0 * (*gamma_sigma0) : PayoffExpr::constant(0.0);
  if (ell == 0.0) return tilted_expect(engine, h, tilt);
  const double num = log_expect_exp(engine, (-ell) * h + tilt);
  const double den = log_expect_exp(engine, tilt);
  return -(num - den) / ell;
}

DemandRateResult demand_rate(const ExpectationEngine& engine,
                             const PayoffExpr& h, double p,
                             const std::optional<PayoffExpr>& gamma_sigma0) {
  const PayoffExpr tilt_base =
      gamma_sigma0 ? -1.0 * (*gamma_sigma0) : PayoffExpr::constant(0.0);
  const auto marginal = [&](double ell) {
    return tilted_expect(engine, h, (-ell) * h + tilt_base);
  };
  DemandRateResult result;
  const double at_zero = marginal(0.0);
  if (std::abs(p - at_zero) <= 1e-9 * (1.0 + std::abs(p))) {
    // demand stays bounded at this price
    result.bounded_demand = true;
    return result;
  }
  const ValueRange range = value_range(engine, h);
  if ((!range.hi_unbounded && p >= range.hi) ||
      (!range.lo_unbounded && p <= range.lo))
    throw NoFiniteDemandError("demand_rate: price outside the claim's range");
  const RootResult root = solve_decreasing(marginal, p, 0.0, 1e-10);
  result.ell = root.x;
  result.residual = root.residual;
  return result;
}

AsymptoticSchedule pepq_asymptotics(
    std::span<const double> params,
    const std::function<SegmentedMarket(double)>& build,
    const std::function<double(double, const PepqResult&)>& scale,
    ExecMode exec) {
  AsymptoticSchedule schedule;
  schedule.points.resize(params.size());
  std::vector<std::string> failures(params.size());
  for_each_chunk(static_cast<std::int64_t>(params.size()), exec,
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t i = lo; i < hi; ++i) {
                     AsymptoticPoint point;
                     point.param = params[i];
                     try {
                       point.pepq = solve_pepq(build(params[i]));
                       point.scaled = scale(params[i], point.pepq);
                     } catch (const std::exception& exc) {
                       failures[i] = exc.what();
                     }
                     schedule.points[i] = point;
                   }
                 });
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (!failures[i].empty())
      throw SolverError("pepq asymptotics failed at schedule point " +
                        std::to_string(i) + ": " + failures[i]);
  // detected limit: three consecutive scaled values within relative 1%
  for (std::size_t i = 2; i < schedule.points.size(); ++i) {
    const double a = schedule.points[i - 2].scaled;
    const double b = schedule.points[i - 1].scaled;
    const double c = schedule.points[i].scaled;
    const double ref = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-12});
    if (std::abs(a - b) <= 0.01 * ref && std::abs(b - c) <= 0.01 * ref) {
      schedule.detected_limit = c;
    }
  }
  return schedule;
}

}  // namespace impact
