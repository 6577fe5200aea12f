#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "impact/maker.hpp"
#include "impact/models.hpp"
#include "oracle.hpp"

using namespace impact;

namespace {

ExpectationEngine quad_engine(int nodes = 64) {
  ExpectationEngine e;
  e.method = Method::Quadrature;
  e.quad_nodes = nodes;
  return e;
}

MakerSpec gaussian_maker(double gamma, double sigma0_coeff) {
  MakerSpec maker;
  maker.gamma = gamma;
  maker.endowment = sigma0_coeff * PayoffExpr::linear_z({1.0});
  maker.assets = {PayoffExpr::linear_z({1.0})};
  return maker;
}

BachelierSpec bachelier_1d(double f, double psi, double T, double y = 1.0,
                           double g = 0.0) {
  BachelierSpec spec{StepFunction::constant(T, {f}),
                     StepFunction::constant(T, {g}),
                     StepFunction::constant_matrix(T, 1, {psi}),
                     StepFunction::constant(T, {y})};
  return spec;
}

}  // namespace

TEST_CASE("static_quote: no trade, Gaussian closed forms") {
  auto quad = quad_engine();
  auto maker = gaussian_maker(1.0, 0.0);
  const double q0[] = {0.0};
  CHECK(static_quote(maker, quad, q0) == doctest::Approx(0.0).epsilon(1e-14));

  // Sigma_0 = 0, Psi = Z, gamma = 1, q = 1: X(q) = q^2/2 = 0.5
  const double q1[] = {1.0};
  CHECK(static_quote(maker, quad, q1) == doctest::Approx(0.5).epsilon(1e-12));

  // gamma = 2, q = -1: X(q) = gamma q^2 / 2 = 1, oracle cross-check
  auto maker2 = gaussian_maker(2.0, 0.0);
  const double qm1[] = {-1.0};
  const double via_oracle =
      std::log(oracle::gauss_expect([](double z) { return std::exp(2.0 * z); })) /
      2.0;
  CHECK(static_quote(maker2, quad, qm1) ==
        doctest::Approx(via_oracle).epsilon(1e-11));
  CHECK(static_quote(maker2, quad, qm1) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("static_quote satisfies the indifference re-evaluation identity") {
  auto quad = quad_engine();
  auto maker = gaussian_maker(1.5, 0.8);
  const double q[] = {1.3};
  const double x = static_quote(maker, quad, q);
  // E[-e^{-gamma(Sigma_0 + X + q'Psi)}] must equal E[-e^{-gamma Sigma_0}]
  const double lhs =
      log_expect_exp(quad, maker_exponent(maker, q)) - maker.gamma * x;
  const double rhs = log_expect_exp(quad, (-maker.gamma) * maker.endowment);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("static_quote is convex along segments; slope at 0 is -E0[q'Psi]") {
  auto quad = quad_engine();
  auto maker = gaussian_maker(1.0, 1.0);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> uq(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double qa[] = {uq(gen)};
    const double qb[] = {uq(gen)};
    const double qm[] = {0.5 * (qa[0] + qb[0])};
    const double xa = static_quote(maker, quad, qa);
    const double xb = static_quote(maker, quad, qb);
    const double xm = static_quote(maker, quad, qm);
    CHECK(xm <= 0.5 * (xa + xb) + 1e-12);
  }
  // directional derivative at 0 in direction q is -E0[q'Psi]
  const double eps = 1e-6;
  const double dir = 1.7;
  const double qe[] = {eps * dir};
  const double deriv = static_quote(maker, quad, qe) / eps;
  const double e0_psi = q0_expect(maker, quad, dir * maker.assets[0]);
  CHECK(deriv == doctest::Approx(-e0_psi).epsilon(1e-5));
  // frozen closed form for Sigma_0 = Psi = Z, gamma = 1: X(q) = q + q^2/2
  const double q1[] = {1.0};
  CHECK(static_quote(maker, quad, q1) == doctest::Approx(1.5).epsilon(1e-11));
}

TEST_CASE("q0_expect: degenerate measure change, tilting, constants") {
  auto quad = quad_engine();
  auto maker0 = gaussian_maker(1.0, 0.0);
  auto z = PayoffExpr::linear_z({1.0});
  CHECK(q0_expect(maker0, quad, z) == doctest::Approx(0.0).epsilon(1e-14));

  auto maker1 = gaussian_maker(1.0, 1.0);
  CHECK(q0_expect(maker1, quad, z) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(q0_expect(maker1, quad, PayoffExpr::constant(2.5)) ==
        doctest::Approx(2.5).epsilon(1e-14));
  // q0_expect(1) = 1 exactly for quadrature
  CHECK(q0_expect(maker1, quad, PayoffExpr::constant(1.0)) == 1.0);
}

TEST_CASE("simulate_gains: zero demand gives identically zero gains") {
  BachelierSpec spec = bachelier_1d(1.0, 1.0, 1.0);
  BachelierHProvider provider(spec, 1.0);
  auto rule = constant_demand({0.0});
  SimConfig config{64, 77, ExecMode::Parallel};
  const auto sim =
      simulate_gains(1.0, provider, TimeGrid::uniform(1.0, 16), *rule, config);
  for (std::int64_t p = 0; p < sim.paths; ++p)
    for (int t = 0; t <= sim.grid.n_steps(); ++t) CHECK(sim.v_at(p, t) == 0.0);
}

TEST_CASE("simulate_gains: Bachelier constant demand matches closed form") {
  // f = 0, psi = 1, d = k = 1, gamma = 1, Q = q: V_T = -q B_T - q^2 T / 2,
  // exact for piecewise-constant data, and equals -q Psi - X(q)
  const double T = 1.0, q = 0.8;
  BachelierSpec spec = bachelier_1d(0.0, 1.0, T);
  BachelierHProvider provider(spec, 1.0);
  auto rule = constant_demand({q});
  SimConfig config{128, 5, ExecMode::Parallel};
  const TimeGrid grid = TimeGrid::uniform(T, 32);
  const PayoffExpr psi = spec.assets()[0];
  const auto sim = simulate_gains(1.0, provider, grid, *rule, config, {&psi, 1});
  MakerSpec maker{1.0, PayoffExpr::constant(0.0), spec.assets()};
  const double qv[] = {q};
  const double xq = static_quote(maker, quad_engine(), qv);
  CHECK(xq == doctest::Approx(q * q * T / 2).epsilon(1e-11));
  for (std::int64_t p = 0; p < sim.paths; ++p) {
    const double bt = sim.co_values[p];  // Psi = B_T here
    CHECK(sim.v_terminal(p) ==
          doctest::Approx(-q * bt - q * q * T / 2).epsilon(1e-10));
    CHECK(sim.v_terminal(p) == doctest::Approx(-q * bt - xq).epsilon(1e-10));
  }
}

TEST_CASE("simulate_gains results do not depend on thread partitioning") {
  BachelierSpec spec = bachelier_1d(0.5, 1.0, 1.0);
  BachelierHProvider provider(spec, 2.0);
  auto rule = constant_demand({1.0});
  const TimeGrid grid = TimeGrid::uniform(1.0, 8);
  SimConfig par{512, 11, ExecMode::Parallel};
  SimConfig ser{512, 11, ExecMode::Serial};
  const auto a = simulate_gains(2.0, provider, grid, *rule, par);
  const auto b = simulate_gains(2.0, provider, grid, *rule, ser);
  CHECK(a.v == b.v);
}

TEST_CASE("wealth identity: zero demand is exact, Bachelier converges at order 1") {
  const double gamma = 1.0;
  BachelierSpec spec = bachelier_1d(1.5, 1.0, 1.0);
  BachelierHProvider provider(spec, gamma);
  SimConfig config{1000, 2024, ExecMode::Parallel};

  auto zero = constant_demand({0.0});
  const auto exact = wealth_identity_check(
      gamma, provider, TimeGrid::uniform(1.0, 64), *zero, config);
  CHECK(exact.max_discrepancy == 0.0);

  // deterministic schedule; discrepancy halves when the step halves
  const int steps = 256;
  std::vector<double> sched(steps);
  for (int s = 0; s < steps; ++s) sched[s] = 1.0 + 0.5 * s / steps;
  auto rule =
      schedule_demand(StepFunction(TimeGrid::uniform(1.0, steps), 1, 1, sched));
  const auto conv = wealth_identity_convergence(
      gamma, provider, TimeGrid::uniform(1.0, steps), *rule, config);
  CHECK(conv.coarse > 0.0);
  CHECK(conv.fine > 0.0);
  CHECK(conv.ratio <= 0.6);
  // observed-constant bound: discrepancy ~ C dt
  CHECK(conv.coarse <= 50.0 / steps);
}

TEST_CASE("budget constraint holds for Bachelier and digital simulations") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> uf(-1.0, 1.0);
  std::uniform_real_distribution<double> uq(-1.5, 1.5);
  for (int rep = 0; rep < 4; ++rep) {
    const double gamma = 0.5 + 0.5 * rep;
    BachelierSpec spec = bachelier_1d(uf(gen), 1.0, 1.0);
    BachelierHProvider provider(spec, gamma);
    MakerSpec maker{gamma, spec.sigma0(), spec.assets()};
    auto rule = constant_demand({uq(gen)});
    SimConfig config{2000, 100 + static_cast<std::uint64_t>(rep), ExecMode::Parallel};
    const auto check = budget_constraint_check(
        maker, provider, TimeGrid::uniform(1.0, 64), *rule, config);
    CHECK(check.estimate <=
          1.0 + 5.0 * (check.std_error + check.dt_bias) + 1e-12);
    // complete-market equality: the estimate should also be near 1 from below
    CHECK(check.estimate >=
          1.0 - 30.0 * (check.std_error + check.dt_bias) - 1e-12);
  }

  DigitalSpec dspec{1.0, 1.0};
  DigitalHProvider dprovider(dspec);
  MakerSpec dmaker{1.0, PayoffExpr::constant(0.0),
                   {PayoffExpr::indicator_terminal(0, 0.0, 1.0)}};
  auto drule = constant_demand({1.0});
  SimConfig dconfig{2000, 55, ExecMode::Parallel};
  const auto dcheck = budget_constraint_check(
      dmaker, dprovider, TimeGrid::uniform(1.0, 64), *drule, dconfig);
  CHECK(dcheck.estimate <=
        1.0 + 5.0 * (dcheck.std_error + dcheck.dt_bias) + 1e-12);
}

TEST_CASE("non-finite H flags paths and aborts over the 0.1% threshold") {
  BachelierSpec spec = bachelier_1d(0.0, 1.0, 1.0);
  BachelierHProvider provider(spec, 1.0);
  auto nan_rule = feedback_demand(
      1, [](int, double, std::span<const double>, std::span<double> q) {
        q[0] = std::numeric_limits<double>::quiet_NaN();
      });
  SimConfig config{256, 3, ExecMode::Parallel};
  CHECK_THROWS_AS(simulate_gains(1.0, provider, TimeGrid::uniform(1.0, 8),
                                 *nan_rule, config),
                  SolverError);
}

TEST_CASE("feedback demand rules see the realized path prefix") {
  BachelierSpec spec = bachelier_1d(0.0, 1.0, 1.0);
  BachelierHProvider provider(spec, 1.0);
  // long when below water, flat otherwise
  auto rule = feedback_demand(
      1, [](int, double, std::span<const double> b, std::span<double> q) {
        q[0] = b[0] < 0.0 ? 1.0 : 0.0;
      });
  SimConfig config{256, 9, ExecMode::Parallel};
  const auto sim =
      simulate_gains(1.0, provider, TimeGrid::uniform(1.0, 32), *rule, config);
  // not all paths can be identically zero
  double total = 0.0;
  for (std::int64_t p = 0; p < sim.paths; ++p) total += std::abs(sim.v_terminal(p));
  CHECK(total > 0.0);
}
