#include "impact/maker.hpp"

#include <cmath>
#include <string>

#include "impact/errors.hpp"
#include "impact/numeric.hpp"
#include "impact/rng.hpp"

namespace impact {

PayoffExpr maker_exponent(const MakerSpec& maker, std::span<const double> q) {
  if (q.size() != maker.assets.size())
    throw ConfigError("static_quote: order size does not match asset count");
  PayoffExpr acc = (-maker.gamma) * maker.endowment;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] != 0.0) acc = acc + (-maker.gamma * q[i]) * maker.assets[i];
  }
  return acc;
}

double static_quote(const MakerSpec& maker, const ExpectationEngine& engine,
                    std::span<const double> q) {
  if (maker.gamma <= 0.0) throw ConfigError("maker: gamma must be positive");
  try {
    const double with_order = log_expect_exp(engine, maker_exponent(maker, q));
    const double no_order =
        log_expect_exp(engine, (-maker.gamma) * maker.endowment);
    return (with_order - no_order) / maker.gamma;
  } catch (const OverflowError&) {
    throw OverflowError(
        "static_quote: expectation overflowed; reduce |q| or gamma");
  }
}

double q0_expect(const MakerSpec& maker, const ExpectationEngine& engine,
                 const PayoffExpr& expr) {
  return tilted_expect(engine, expr, (-maker.gamma) * maker.endowment);
}

// --- demand rules ----------------------------------------------------------

namespace {

class ConstantDemand final : public DemandRule {
 public:
  explicit ConstantDemand(std::vector<double> q) : q_(std::move(q)) {}
  int dim() const override { return static_cast<int>(q_.size()); }
  void eval(int, double, std::span<const double>,
            std::span<double> out) const override {
    for (std::size_t i = 0; i < q_.size(); ++i) out[i] = q_[i];
  }

 private:
  std::vector<double> q_;
};

class ScheduleDemand final : public DemandRule {
 public:
  explicit ScheduleDemand(StepFunction q) : q_(std::move(q)) {
    if (q_.cols() != 1)
      throw ConfigError("demand schedule: must be vector-valued");
  }
  int dim() const override { return q_.rows(); }
  void eval(int, double t, std::span<const double>,
            std::span<double> out) const override {
    const auto v = q_.value_at(t);
    for (int i = 0; i < q_.rows(); ++i) out[i] = v[i];
  }

 private:
  StepFunction q_;
};

class FeedbackDemand final : public DemandRule {
 public:
  FeedbackDemand(int dim,
                 std::function<void(int, double, std::span<const double>,
                                    std::span<double>)>
                     rule)
      : dim_(dim), rule_(std::move(rule)) {}
  int dim() const override { return dim_; }
  void eval(int step, double t, std::span<const double> state,
            std::span<double> out) const override {
    rule_(step, t, state, out);
  }

 private:
  int dim_;
  std::function<void(int, double, std::span<const double>, std::span<double>)>
      rule_;
};

}  // namespace

std::unique_ptr<DemandRule> constant_demand(std::vector<double> q) {
  return std::make_unique<ConstantDemand>(std::move(q));
}

std::unique_ptr<DemandRule> schedule_demand(StepFunction q) {
  return std::make_unique<ScheduleDemand>(std::move(q));
}

std::unique_ptr<DemandRule> feedback_demand(
    int dim,
    std::function<void(int, double, std::span<const double>, std::span<double>)>
        rule) {
  return std::make_unique<FeedbackDemand>(dim, std::move(rule));
}

// --- path kernels ----------------------------------------------------------

namespace {

struct PathState {
  std::vector<double> b;      // current Brownian value
  std::vector<double> q;      // demand
  std::vector<double> h_q;    // H(Q)
  std::vector<double> h_0;    // H(0)
  std::vector<double> q_zero;
};

// Per step: V += (1/g) pi'(dB - H0 dt) - (1/2g)|pi|^2 dt, pi = H(Q) - H(0),
// everything evaluated at the left endpoint. per_step receives the step's
// inner products so callers can drive additional recursions (the identity
// check runs the level-space wealth off the same quantities).
template <class PerStep>
void run_path(const HProvider& provider, const DemandRule& rule,
              const TimeGrid& grid, std::span<const double> increments,
              double gamma, PathState& st, bool& finite_ok, PerStep per_step) {
  const int d = provider.brownian_dim();
  const int steps = grid.n_steps();
  std::fill(st.b.begin(), st.b.end(), 0.0);
  finite_ok = true;
  double v = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double t = grid.node(s);
    const double dt = grid.dt(s);
    rule.eval(s, t, st.b, st.q);
    provider.eval(t, st.b, st.q, st.h_q);
    provider.eval(t, st.b, st.q_zero, st.h_0);
    double pi_db = 0.0, pi_h0 = 0.0, pi_sq = 0.0;
    for (int c = 0; c < d; ++c) {
      const double pi = st.h_q[c] - st.h_0[c];
      if (!std::isfinite(pi)) finite_ok = false;
      pi_db += pi * increments[s * d + c];
      pi_h0 += pi * st.h_0[c];
      pi_sq += pi * pi;
    }
    v += (pi_db - pi_h0 * dt) / gamma - 0.5 * pi_sq * dt / gamma;
    per_step(s, v, pi_db, pi_h0, pi_sq, dt);
    for (int c = 0; c < d; ++c) st.b[c] += increments[s * d + c];
  }
}

PathState make_state(const HProvider& provider) {
  PathState st;
  st.b.resize(provider.brownian_dim());
  st.q.resize(provider.demand_dim());
  st.h_q.resize(provider.brownian_dim());
  st.h_0.resize(provider.brownian_dim());
  st.q_zero.assign(provider.demand_dim(), 0.0);
  return st;
}

void generate_increments(PathRng& rng, const TimeGrid& grid, int d,
                         std::span<double> out) {
  for (int s = 0; s < grid.n_steps(); ++s) {
    const double sdt = std::sqrt(grid.dt(s));
    for (int c = 0; c < d; ++c) out[s * d + c] = rng.normal() * sdt;
  }
}

void check_flagged(std::int64_t flagged, std::int64_t paths) {
  if (flagged * 1000 > paths)
    throw SolverError("simulation: " + std::to_string(flagged) + " of " +
                      std::to_string(paths) +
                      " paths hit non-finite H (>0.1%), aborting");
}

}  // namespace

GainsSimResult simulate_gains(double gamma, const HProvider& provider,
                              const TimeGrid& grid, const DemandRule& rule,
                              const SimConfig& config,
                              std::span<const PayoffExpr> co_exprs) {
  if (gamma <= 0.0) throw ConfigError("simulate_gains: gamma must be positive");
  if (rule.dim() != provider.demand_dim())
    throw ConfigError("simulate_gains: demand dimension mismatch");
  const int d = provider.brownian_dim();
  const int steps = grid.n_steps();
  GainsSimResult result{grid, config.paths, d, {}, {}, 0};
  result.v.assign(static_cast<std::size_t>(config.paths) * (steps + 1), 0.0);
  std::unique_ptr<PathExprEvaluator> co_eval;
  if (!co_exprs.empty()) {
    co_eval = std::make_unique<PathExprEvaluator>(co_exprs, grid, d);
    result.co_values.assign(
        static_cast<std::size_t>(config.paths) * co_exprs.size(), 0.0);
  }
  std::vector<std::int64_t> flags(config.paths, 0);

  for_each_chunk(config.paths, config.exec, [&](std::int64_t lo, std::int64_t hi) {
    PathState st = make_state(provider);
    std::vector<double> inc(static_cast<std::size_t>(steps) * d);
    std::vector<double> co(co_exprs.size());
    for (std::int64_t p = lo; p < hi; ++p) {
      PathRng rng(config.seed, static_cast<std::uint64_t>(p));
      generate_increments(rng, grid, d, inc);
      double* v_row = result.v.data() + static_cast<std::size_t>(p) * (steps + 1);
      bool ok = true;
      run_path(provider, rule, grid, inc, gamma, st, ok,
               [&](int s, double v, double, double, double, double) {
                 v_row[s + 1] = v;
               });
      if (!ok) flags[p] = 1;
      if (co_eval) {
        co_eval->eval(inc, co);
        for (std::size_t e = 0; e < co.size(); ++e)
          result.co_values[static_cast<std::size_t>(p) * co.size() + e] = co[e];
      }
    }
  });
  result.flagged = static_cast<std::int64_t>(
      pairwise_sum_indexed(0, config.paths, [&](std::int64_t i) {
        return static_cast<double>(flags[i]);
      }));
  check_flagged(result.flagged, config.paths);
  return result;
}

namespace {

// one path's max |V_t - (1/gamma) log X_t| with Milstein X
double identity_gap_one_path(const HProvider& provider, const DemandRule& rule,
                             const TimeGrid& grid,
                             std::span<const double> increments, double gamma,
                             PathState& st, bool& ok) {
  double log_x = 0.0;  // X_0 = 1 (x = 0)
  double gap = 0.0;
  bool x_ok = true;
  run_path(provider, rule, grid, increments, gamma, st, ok,
           [&](int, double v, double pi_db, double pi_h0, double pi_sq,
               double dt) {
             // dX/X = pi'(lambda dt + dB), lambda = -H(0); Milstein adds
             // 0.5((pi'dB)^2 - |pi|^2 dt)
             const double growth = 1.0 + (pi_db - pi_h0 * dt) +
                                   0.5 * (pi_db * pi_db - pi_sq * dt);
             if (growth <= 0.0) {
               x_ok = false;
               return;
             }
             log_x += std::log(growth);
             gap = std::max(gap, std::abs(v - log_x / gamma));
           });
  if (!x_ok) ok = false;
  return gap;
}

}  // namespace

IdentityCheckResult wealth_identity_check(double gamma,
                                          const HProvider& provider,
                                          const TimeGrid& grid,
                                          const DemandRule& rule,
                                          const SimConfig& config) {
  const int d = provider.brownian_dim();
  const int steps = grid.n_steps();
  std::vector<double> gaps(config.paths, 0.0);
  std::vector<std::int64_t> flags(config.paths, 0);
  for_each_chunk(config.paths, config.exec, [&](std::int64_t lo, std::int64_t hi) {
    PathState st = make_state(provider);
    std::vector<double> inc(static_cast<std::size_t>(steps) * d);
    for (std::int64_t p = lo; p < hi; ++p) {
      PathRng rng(config.seed, static_cast<std::uint64_t>(p));
      generate_increments(rng, grid, d, inc);
      bool ok = true;
      gaps[p] = identity_gap_one_path(provider, rule, grid, inc, gamma, st, ok);
      if (!ok) flags[p] = 1;
    }
  });
  IdentityCheckResult result;
  result.max_discrepancy = max_value(gaps);
  result.flagged = static_cast<std::int64_t>(pairwise_sum_indexed(
      0, config.paths,
      [&](std::int64_t i) { return static_cast<double>(flags[i]); }));
  check_flagged(result.flagged, config.paths);
  return result;
}

ConvergenceCheckResult wealth_identity_convergence(double gamma,
                                                   const HProvider& provider,
                                                   const TimeGrid& coarse,
                                                   const DemandRule& rule,
                                                   const SimConfig& config) {
  const int d = provider.brownian_dim();
  const TimeGrid fine = coarse.refined();
  const int steps = coarse.n_steps();
  std::vector<double> gap_c(config.paths, 0.0), gap_f(config.paths, 0.0);
  std::vector<std::int64_t> flags(config.paths, 0);
  for_each_chunk(config.paths, config.exec, [&](std::int64_t lo, std::int64_t hi) {
    PathState st = make_state(provider);
    std::vector<double> inc_f(static_cast<std::size_t>(2 * steps) * d);
    std::vector<double> inc_c(static_cast<std::size_t>(steps) * d);
    for (std::int64_t p = lo; p < hi; ++p) {
      PathRng rng(config.seed, static_cast<std::uint64_t>(p));
      generate_increments(rng, fine, d, inc_f);
      // coarse increments are the pairwise sums of the fine ones
      for (int s = 0; s < steps; ++s)
        for (int c = 0; c < d; ++c)
          inc_c[s * d + c] =
              inc_f[(2 * s) * d + c] + inc_f[(2 * s + 1) * d + c];
      bool ok_c = true, ok_f = true;
      gap_c[p] = identity_gap_one_path(provider, rule, coarse, inc_c, gamma,
                                       st, ok_c);
      gap_f[p] =
          identity_gap_one_path(provider, rule, fine, inc_f, gamma, st, ok_f);
      if (!ok_c || !ok_f) flags[p] = 1;
    }
  });
  const std::int64_t flagged = static_cast<std::int64_t>(pairwise_sum_indexed(
      0, config.paths,
      [&](std::int64_t i) { return static_cast<double>(flags[i]); }));
  check_flagged(flagged, config.paths);
  ConvergenceCheckResult result;
  result.coarse = max_value(gap_c);
  result.fine = max_value(gap_f);
  result.ratio = result.fine / std::max(result.coarse, 1e-300);
  return result;
}

namespace {

// E_0-weighted sample mean of e^{gamma V_T}: exp(lse(gamma V - gamma Sigma_0)
// - lse(-gamma Sigma_0)), with a delta-method standard error for the ratio.
std::pair<double, double> budget_estimate(double gamma,
                                          std::span<const double> v_terminal,
                                          std::span<const double> sigma0) {
  const std::int64_t n = static_cast<std::int64_t>(v_terminal.size());
  std::vector<double> a(n), b(n);
  for (std::int64_t p = 0; p < n; ++p) {
    b[p] = -gamma * sigma0[p];
    a[p] = gamma * v_terminal[p] + b[p];
  }
  const double estimate = std::exp(log_sum_exp(a) - log_sum_exp(b));
  // delta method on R = mean(x)/mean(y) with x = e^{a - ma}, y = e^{b - mb}
  const double ma = max_value(a), mb = max_value(b);
  std::vector<double> x(n), y(n);
  for (std::int64_t p = 0; p < n; ++p) {
    x[p] = std::exp(a[p] - ma);
    y[p] = std::exp(b[p] - mb);
  }
  const double my = mean(y);
  const double r = mean(x) / my;
  double s = 0.0;
  for (std::int64_t p = 0; p < n; ++p) {
    const double e = (x[p] - r * y[p]) / my;
    s += e * e;
  }
  const double se_scaled = std::sqrt(s / (n - 1) / n);
  const double scale = estimate / std::max(r, 1e-300);
  return {estimate, se_scaled * scale};
}

}  // namespace

BudgetCheckResult budget_constraint_check(const MakerSpec& maker,
                                          const HProvider& provider,
                                          const TimeGrid& grid,
                                          const DemandRule& rule,
                                          const SimConfig& config) {
  const int d = provider.brownian_dim();
  const int steps = grid.n_steps();
  const TimeGrid fine = grid.refined();
  const PayoffExpr sigma0_expr = maker.endowment;
  PathExprEvaluator sigma0_eval({&sigma0_expr, 1}, fine, d);

  std::vector<double> vt_c(config.paths), vt_f(config.paths),
      sig(config.paths);
  std::vector<std::int64_t> flags(config.paths, 0);
  for_each_chunk(config.paths, config.exec, [&](std::int64_t lo, std::int64_t hi) {
    PathState st = make_state(provider);
    std::vector<double> inc_f(static_cast<std::size_t>(2 * steps) * d);
    std::vector<double> inc_c(static_cast<std::size_t>(steps) * d);
    double one[1];
    for (std::int64_t p = lo; p < hi; ++p) {
      PathRng rng(config.seed, static_cast<std::uint64_t>(p));
      generate_increments(rng, fine, d, inc_f);
      // coarse increments: pairwise sums of the fine ones (same path)
      for (int s = 0; s < steps; ++s)
        for (int c = 0; c < d; ++c)
          inc_c[s * d + c] = inc_f[(2 * s) * d + c] + inc_f[(2 * s + 1) * d + c];
      bool ok_c = true, ok_f = true;
      double v = 0.0;
      run_path(provider, rule, grid, inc_c, maker.gamma, st, ok_c,
               [&](int, double vv, double, double, double, double) { v = vv; });
      vt_c[p] = v;
      run_path(provider, rule, fine, inc_f, maker.gamma, st, ok_f,
               [&](int, double vv, double, double, double, double) { v = vv; });
      vt_f[p] = v;
      sigma0_eval.eval(inc_f, one);
      sig[p] = one[0];
      if (!ok_c || !ok_f) flags[p] = 1;
    }
  });
  const std::int64_t flagged = static_cast<std::int64_t>(pairwise_sum_indexed(
      0, config.paths,
      [&](std::int64_t i) { return static_cast<double>(flags[i]); }));
  check_flagged(flagged, config.paths);

  const auto [est_c, se_c] = budget_estimate(maker.gamma, vt_c, sig);
  const auto [est_f, se_f] = budget_estimate(maker.gamma, vt_f, sig);
  BudgetCheckResult result;
  result.estimate = est_c;
  result.std_error = se_c;
  // first-order scheme: the coarse bias is about twice the coarse-fine gap
  result.dt_bias = 2.0 * std::abs(est_c - est_f);
  return result;
}

}  // namespace impact
