#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "impact/models.hpp"
#include "impact/pricing.hpp"

namespace impact {

// Two investors trading the shared claim bilaterally, each hedging with her
// own local market maker.
struct SegmentedMarket {
  ClaimSetup side_a;
  ClaimSetup side_b;  // must reference the same claim h
};

struct PepqResult {
  double u_star = 0.0;
  double p_star = 0.0;
  double residual_a = 0.0;  // marginal-price defects at (u*, -u*)
  double residual_b = 0.0;
};

// sample variance of beta_A(S0^A+S1^A) - beta_B(S0^B+S1^B); the uniqueness
// hypothesis requires it to be nonconstant
double degeneracy_witness_variance(const SegmentedMarket& market);

// First-order condition: the two tilted marginal prices coincide at (u*, -u*).
PepqResult solve_pepq(const SegmentedMarket& market);

struct BachelierSide {
  BachelierSpec spec;
  double gamma = 1.0;
  double alpha = 1.0;

  double beta() const { return gamma * alpha / (gamma + alpha); }
};

// Closed forms for the all-Bachelier segmented market (shared y).
PepqResult bachelier_pepq(const BachelierSide& a, const BachelierSide& b);

// builds the numeric SegmentedMarket for the same data
SegmentedMarket bachelier_segmented_market(const BachelierSide& a,
                                           const BachelierSide& b,
                                           const ExpectationEngine& engine);

// Vanishing-aversion limit price p_inf(l) = -(1/l) log E[e^{-l h}], or the
// endowment-tilted variant when gamma_sigma0 (= gamma Sigma_0) is kept fixed.
double limit_price(const ExpectationEngine& engine, const PayoffExpr& h,
                   double ell,
                   const std::optional<PayoffExpr>& gamma_sigma0 = {});

struct DemandRateResult {
  double ell = 0.0;
  bool bounded_demand = false;  // p equals the zero-rate marginal price
  double residual = 0.0;
};

// growth rate l of optimal positions: solves p = E[h e^{-l h - g S0}]/E[...]
DemandRateResult demand_rate(const ExpectationEngine& engine,
                             const PayoffExpr& h, double p,
                             const std::optional<PayoffExpr>& gamma_sigma0 = {});

struct AsymptoticPoint {
  double param = 0.0;  // beta_n, gamma_n or n
  PepqResult pepq;
  double scaled = 0.0;  // e.g. u* (gamma_A + gamma_B), or u*/n
};

struct AsymptoticSchedule {
  std::vector<AsymptoticPoint> points;
  std::optional<double> detected_limit;  // three consecutive points within 1%
};

AsymptoticSchedule pepq_asymptotics(
    std::span<const double> params,
    const std::function<SegmentedMarket(double)>& build,
    const std::function<double(double, const PepqResult&)>& scale,
    ExecMode exec = ExecMode::Parallel);

}  // namespace impact
