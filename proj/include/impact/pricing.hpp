#pragma once

#include <span>
#include <vector>

#include "impact/maker.hpp"

namespace impact {

// Claim-level analytics for one maker/investor pair: replication bounds,
// arbitrage classification, the demand schedule, indifference values and the
// investor's value function.
struct ClaimSetup {
  MakerSpec maker;
  InvestorSpec investor;
  PayoffExpr claim;  // h
  ExpectationEngine engine;

  // representative risk aversion: 1/beta = 1/alpha + 1/gamma
  double beta() const {
    return maker.gamma * investor.alpha / (maker.gamma + investor.alpha);
  }

  // Empirical integrability probe at exponent scale p: evaluates the
  // exp-moments of -gamma S0 +- p Psi_i +- p h and -alpha S1 +- p h, throwing
  // OverflowError on a non-finite evaluation. Symbolic verification is not
  // possible for pointwise leaves; the model author owns that obligation.
  void check_integrability(double p = 1.0) const;
};

// E_0[h], the unique price that is arbitrage-free for all positions
double q0_price(const ClaimSetup& setup);

// per-unit replication capital for selling u > 0 units:
// (1/(gamma u)) log E_0[e^{gamma u h}]; u = 0 returns the limit E_0[h]
double upper_bound(const ClaimSetup& setup, double u);
// buying counterpart: -(1/(gamma u)) log E_0[e^{-gamma u h}]
double lower_bound(const ClaimSetup& setup, double u);

enum class PriceClass { ArbitrageFree, SellArbitrage, BuyArbitrage };

const char* to_string(PriceClass c);

// classification at level u with the closed-interval convention at endpoints
PriceClass classify_price(const ClaimSetup& setup, double p, double u);

// arbitrage-free for all positions: p = E_0[h] up to tolerance
bool strong_classify(const ClaimSetup& setup, double p);

struct DemandPoint {
  double p = 0.0;
  double u_hat = 0.0;
  double residual = 0.0;  // first-order-condition defect in price units
};

// marginal (tilted) price E[h e^{-beta(S0+S1+u h)}] / E[e^{-beta(S0+S1+u h)}];
// strictly decreasing in u
double tilted_marginal(const ClaimSetup& setup, double u);

// optimal demand u_hat(p): unique root of tilted_marginal(u) = p
DemandPoint demand(const ClaimSetup& setup, double p);

// per-unit indifference value for u != 0 units
double indifference_price(const ClaimSetup& setup, double u);

// exponential-utility value function (always negative) and its log-magnitude
double value_function(const ClaimSetup& setup);
double value_function_log_neg(const ClaimSetup& setup);

// empirical essential range of the claim
ValueRange claim_range(const ClaimSetup& setup);

struct BoundsRow {
  double u = 0.0;
  double lower = 0.0;
  double q0 = 0.0;
  double upper = 0.0;
};

std::vector<BoundsRow> bounds_table(const ClaimSetup& setup,
                                    std::span<const double> u_grid,
                                    ExecMode exec = ExecMode::Parallel);

std::vector<DemandPoint> demand_schedule(const ClaimSetup& setup,
                                         std::span<const double> p_grid,
                                         ExecMode exec = ExecMode::Parallel);

}  // namespace impact
