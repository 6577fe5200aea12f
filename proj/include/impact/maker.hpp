#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "impact/expectation.hpp"
#include "impact/payoff_expr.hpp"

namespace impact {

// Representative market maker: CARA aversion gamma, endowment Sigma_0 and the
// k traded payoffs Psi.
struct MakerSpec {
  double gamma = 1.0;
  PayoffExpr endowment;            // Sigma_0
  std::vector<PayoffExpr> assets;  // Psi
};

struct InvestorSpec {
  double alpha = 1.0;
  PayoffExpr endowment;  // Sigma_1
};

// -gamma (Sigma_0 + q'Psi) as an expression
PayoffExpr maker_exponent(const MakerSpec& maker, std::span<const double> q);

// Static indifference quote X(q): E[-e^{-gamma(Sigma_0 + X + q'Psi)}] stays at
// the no-trade level.
double static_quote(const MakerSpec& maker, const ExpectationEngine& engine,
                    std::span<const double> q);

// E_0[expr] under the maker's risk-neutral measure dQ0/dP ~ e^{-gamma Sigma_0}
double q0_expect(const MakerSpec& maker, const ExpectationEngine& engine,
                 const PayoffExpr& expr);

// Model-supplied martingale loading H_t(q): the fictitious-market strategy
// generated by a demand q given the current Brownian state.
class HProvider {
 public:
  virtual ~HProvider() = default;
  virtual int brownian_dim() const = 0;
  virtual int demand_dim() const = 0;
  virtual void eval(double t, std::span<const double> state,
                    std::span<const double> q, std::span<double> out) const = 0;
};

// Demand processes are grid-adapted rules: the value over [t_s, t_{s+1}) is
// fixed from information available at t_s.
class DemandRule {
 public:
  virtual ~DemandRule() = default;
  virtual int dim() const = 0;
  virtual void eval(int step, double t, std::span<const double> state,
                    std::span<double> q_out) const = 0;
};

std::unique_ptr<DemandRule> constant_demand(std::vector<double> q);
// deterministic schedule, located by time so grid refinements see the same Q
std::unique_ptr<DemandRule> schedule_demand(StepFunction q);
std::unique_ptr<DemandRule> feedback_demand(
    int dim,
    std::function<void(int, double, std::span<const double>, std::span<double>)>
        rule);

struct SimConfig {
  std::int64_t paths = 1000;
  std::uint64_t seed = 0;
  ExecMode exec = ExecMode::Parallel;
};

struct GainsSimResult {
  TimeGrid grid;
  std::int64_t paths = 0;
  int dim = 0;
  std::vector<double> v;          // paths x (n_steps+1), V_0 = 0
  std::vector<double> co_values;  // paths x co_exprs.size()
  std::int64_t flagged = 0;

  double v_at(std::int64_t p, int t) const {
    return v[static_cast<std::size_t>(p) * (grid.n_steps() + 1) + t];
  }
  double v_terminal(std::int64_t p) const { return v_at(p, grid.n_steps()); }
};

// Explicit Euler of the gains process, left-endpoint evaluation of H.
// co_exprs are evaluated on the same paths (used for Q0 reweighting).
GainsSimResult simulate_gains(double gamma, const HProvider& provider,
                              const TimeGrid& grid, const DemandRule& rule,
                              const SimConfig& config,
                              std::span<const PayoffExpr> co_exprs = {});

struct IdentityCheckResult {
  double max_discrepancy = 0.0;
  std::int64_t flagged = 0;
};

// Max over paths and times of |V_t(Q) - (1/gamma) log X_t(pi)| where the
// fictitious wealth X(pi), pi = H(Q) - H(0), is simulated independently by a
// Milstein step on dX/X = pi'(lambda dt + dB), lambda = -H(0).
IdentityCheckResult wealth_identity_check(double gamma,
                                          const HProvider& provider,
                                          const TimeGrid& grid,
                                          const DemandRule& rule,
                                          const SimConfig& config);

struct ConvergenceCheckResult {
  double coarse = 0.0;
  double fine = 0.0;
  double ratio = 0.0;
};

// Same check on a coarse grid and its dyadic refinement driven by the same
// Brownian paths; first-order schemes halve the discrepancy.
ConvergenceCheckResult wealth_identity_convergence(double gamma,
                                                   const HProvider& provider,
                                                   const TimeGrid& coarse,
                                                   const DemandRule& rule,
                                                   const SimConfig& config);

struct BudgetCheckResult {
  double estimate = 0.0;   // sample E_0[e^{gamma V_T(Q)}]
  double std_error = 0.0;
  double dt_bias = 0.0;    // Richardson estimate from a dyadic refinement
};

// Sample check of the budget constraint E_0[e^{gamma V_T(Q)}] <= 1.
BudgetCheckResult budget_constraint_check(const MakerSpec& maker,
                                          const HProvider& provider,
                                          const TimeGrid& grid,
                                          const DemandRule& rule,
                                          const SimConfig& config);

}  // namespace impact
