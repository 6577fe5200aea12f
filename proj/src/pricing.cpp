#include "impact/pricing.hpp"

#include <cmath>

#include "impact/errors.hpp"
#include "impact/root_find.hpp"

namespace impact {

namespace {

constexpr double kEndpointTolScale = 1e-9;   // classification band
constexpr double kDemandResidualTol = 1e-10;  // bisection residual in p units

PayoffExpr q0_tilt(const ClaimSetup& setup) {
  return (-setup.maker.gamma) * setup.maker.endowment;
}

PayoffExpr joint_tilt(const ClaimSetup& setup, double u) {
  // -beta (Sigma_0 + Sigma_1 + u h)
  PayoffExpr acc = setup.maker.endowment + setup.investor.endowment;
  if (u != 0.0) acc = acc + u * setup.claim;
  return (-setup.beta()) * acc;
}

}  // namespace

void ClaimSetup::check_integrability(double p) const {
  const PayoffExpr maker_base = (-maker.gamma) * maker.endowment;
  const PayoffExpr investor_base = (-investor.alpha) * investor.endowment;
  for (double sign : {p, -p}) {
    log_expect_exp(engine, investor_base + sign * claim);
    for (const PayoffExpr& asset : maker.assets)
      for (double asset_sign : {p, -p})
        log_expect_exp(engine, maker_base + asset_sign * asset + sign * claim);
  }
}

double q0_price(const ClaimSetup& setup) {
  return tilted_expect(setup.engine, setup.claim, q0_tilt(setup));
}

double upper_bound(const ClaimSetup& setup, double u) {
  if (u < 0.0) throw ConfigError("upper_bound: level must be >= 0");
  if (u == 0.0) return q0_price(setup);  // dominated-convergence limit
  const double gamma = setup.maker.gamma;
  try {
    const double num =
        log_expect_exp(setup.engine, (gamma * u) * setup.claim + q0_tilt(setup));
    const double den = log_expect_exp(setup.engine, q0_tilt(setup));
    return (num - den) / (gamma * u);
  } catch (const OverflowError&) {
    throw OverflowError("upper_bound: overflow; reduce the position size u");
  }
}

double lower_bound(const ClaimSetup& setup, double u) {
  if (u < 0.0) throw ConfigError("lower_bound: level must be >= 0");
  if (u == 0.0) return q0_price(setup);
  const double gamma = setup.maker.gamma;
  try {
    const double num = log_expect_exp(
        setup.engine, (-gamma * u) * setup.claim + q0_tilt(setup));
    const double den = log_expect_exp(setup.engine, q0_tilt(setup));
    return -(num - den) / (gamma * u);
  } catch (const OverflowError&) {
    throw OverflowError("lower_bound: overflow; reduce the position size u");
  }
}

const char* to_string(PriceClass c) {
  switch (c) {
    case PriceClass::ArbitrageFree:
      return "arbitrage_free";
    case PriceClass::SellArbitrage:
      return "sell_arbitrage";
    case PriceClass::BuyArbitrage:
      return "buy_arbitrage";
  }
  return "?";
}

PriceClass classify_price(const ClaimSetup& setup, double p, double u) {
  if (u <= 0.0) throw ConfigError("classify_price: level must be positive");
  const double tol = kEndpointTolScale * (1.0 + std::abs(p));
  // the arbitrage-free interval is closed: endpoints are inclusive
  if (p > upper_bound(setup, u) + tol) return PriceClass::SellArbitrage;
  if (p < lower_bound(setup, u) - tol) return PriceClass::BuyArbitrage;
  return PriceClass::ArbitrageFree;
}

bool strong_classify(const ClaimSetup& setup, double p) {
  return std::abs(p - q0_price(setup)) <= kEndpointTolScale * (1.0 + std::abs(p));
}

double tilted_marginal(const ClaimSetup& setup, double u) {
  return tilted_expect(setup.engine, setup.claim, joint_tilt(setup, u));
}

ValueRange claim_range(const ClaimSetup& setup) {
  return value_range(setup.engine, setup.claim);
}

DemandPoint demand(const ClaimSetup& setup, double p) {
  const ValueRange range = claim_range(setup);
  const double tol = kEndpointTolScale * (1.0 + std::abs(p));
  if (!range.hi_unbounded && p >= range.hi - tol)
    throw NoFiniteDemandError(
        "demand: price at or above the claim's essential supremum; "
        "no finite demand (utility-demand arbitrage)");
  if (!range.lo_unbounded && p <= range.lo + tol)
    throw NoFiniteDemandError(
        "demand: price at or below the claim's essential infimum; "
        "no finite demand (utility-demand arbitrage)");
  const RootResult root = solve_decreasing(
      [&](double u) { return tilted_marginal(setup, u); }, p, 0.0,
      kDemandResidualTol);
  return DemandPoint{p, root.x, root.residual};
}

double indifference_price(const ClaimSetup& setup, double u) {
  if (u == 0.0)
    throw ConfigError("indifference_price: u must be nonzero (the u -> 0 "
                      "limit is the tilted marginal at 0)");
  const double beta = setup.beta();
  const double with_claim = log_expect_exp(setup.engine, joint_tilt(setup, u));
  const double without = log_expect_exp(setup.engine, joint_tilt(setup, 0.0));
  return -(with_claim - without) / (beta * u);
}

double value_function_log_neg(const ClaimSetup& setup) {
  const double alpha = setup.investor.alpha;
  const double gamma = setup.maker.gamma;
  const double beta = setup.beta();
  const double l0 = log_expect_exp(setup.engine, (-gamma) * setup.maker.endowment);
  const double l1 = log_expect_exp(setup.engine, joint_tilt(setup, 0.0));
  return (-alpha / gamma) * l0 + (alpha / beta) * l1;
}

double value_function(const ClaimSetup& setup) {
  const double log_neg = value_function_log_neg(setup);
  const double v = -std::exp(log_neg);
  if (!std::isfinite(v))
    throw OverflowError("value_function: overflow; see value_function_log_neg");
  return v;
}

std::vector<BoundsRow> bounds_table(const ClaimSetup& setup,
                                    std::span<const double> u_grid,
                                    ExecMode exec) {
  std::vector<BoundsRow> rows(u_grid.size());
  for_each_chunk(static_cast<std::int64_t>(u_grid.size()), exec,
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t i = lo; i < hi; ++i) {
                     rows[i].u = u_grid[i];
                     rows[i].lower = lower_bound(setup, u_grid[i]);
                     rows[i].q0 = q0_price(setup);
                     rows[i].upper = upper_bound(setup, u_grid[i]);
                   }
                 });
  return rows;
}

std::vector<DemandPoint> demand_schedule(const ClaimSetup& setup,
                                         std::span<const double> p_grid,
                                         ExecMode exec) {
  std::vector<DemandPoint> rows(p_grid.size());
  for_each_chunk(static_cast<std::int64_t>(p_grid.size()), exec,
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t i = lo; i < hi; ++i)
                     rows[i] = demand(setup, p_grid[i]);
                 });
  return rows;
}

}  // namespace impact
