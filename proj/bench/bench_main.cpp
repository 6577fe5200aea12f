// Serial vs OpenMP timing for the data-parallel kernels. Results must agree
// bit-for-bit; only the wall clock may differ.

#include <chrono>
#include <cstdio>
#include <string>

#include "impact/equilibrium.hpp"
#include "impact/expectation.hpp"
#include "impact/maker.hpp"
#include "impact/models.hpp"

using namespace impact;

namespace {

struct Timing {
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool identical = false;
};

template <class F>
double time_ms(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

void report(const char* name, const Timing& t) {
  std::printf("%-28s serial %9.1f ms   parallel %9.1f ms   speedup %5.2fx   %s\n",
              name, t.serial_ms, t.parallel_ms, t.serial_ms / t.parallel_ms,
              t.identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("impact_pricer kernel benchmark (%d threads available)\n\n",
              max_threads());

  {
    // Monte Carlo expectation, 4e6 paths
    ExpectationEngine mc;
    mc.method = Method::MonteCarlo;
    mc.mc_paths = 4000000;
    mc.seed = 42;
    auto expr = PayoffExpr::linear_z({1.0}) * PayoffExpr::linear_z({1.0}) +
                0.3 * PayoffExpr::indicator_z(0, 0.5);
    Timing t;
    double serial = 0.0, parallel = 0.0;
    mc.exec = ExecMode::Serial;
    t.serial_ms = time_ms([&] { serial = expect(mc, expr); });
    mc.exec = ExecMode::Parallel;
    t.parallel_ms = time_ms([&] { parallel = expect(mc, expr); });
    t.identical = serial == parallel;
    report("mc expectation (4e6)", t);
  }

  {
    // tensor quadrature, 3 dimensions, 128^3 nodes
    ExpectationEngine quad;
    quad.quad_nodes = 128;
    auto expr = PayoffExpr::linear_z({0.5, 0.5, 0.0}) *
                    PayoffExpr::linear_z({0.0, 1.0, -0.5}) +
                PayoffExpr::linear_z({0.0, 0.0, 1.0});
    Timing t;
    double serial = 0.0, parallel = 0.0;
    quad.exec = ExecMode::Serial;
    t.serial_ms = time_ms([&] { serial = expect(quad, expr); });
    quad.exec = ExecMode::Parallel;
    t.parallel_ms = time_ms([&] { parallel = expect(quad, expr); });
    t.identical = serial == parallel;
    report("quadrature 128^3", t);
  }

  {
    // gains-process simulation, 2e4 paths x 512 steps
    BachelierSpec spec{StepFunction::constant(1.0, {1.0}),
                       StepFunction::constant(1.0, {0.0}),
                       StepFunction::constant_matrix(1.0, 1, {1.0}),
                       StepFunction::constant(1.0, {1.0})};
    BachelierHProvider provider(spec, 2.0);
    auto rule = constant_demand({1.0});
    const TimeGrid grid = TimeGrid::uniform(1.0, 512);
    Timing t;
    GainsSimResult serial{grid, 0, 1, {}, {}, 0}, parallel{grid, 0, 1, {}, {}, 0};
    SimConfig cfg{20000, 9, ExecMode::Serial};
    t.serial_ms = time_ms(
        [&] { serial = simulate_gains(2.0, provider, grid, *rule, cfg); });
    cfg.exec = ExecMode::Parallel;
    t.parallel_ms = time_ms(
        [&] { parallel = simulate_gains(2.0, provider, grid, *rule, cfg); });
    t.identical = serial.v == parallel.v;
    report("gains sim (2e4 x 512)", t);
  }

  {
    // region raster 1201 x 601
    TwoDDigitalSpec spec{1.0, 0.0, 0.0, 0.0};
    Timing t;
    Raster serial, parallel;
    t.serial_ms = time_ms([&] {
      serial = region_raster(spec, -4, 4, -0.78, 0.78, 1201, 601,
                             ExecMode::Serial);
    });
    t.parallel_ms = time_ms([&] {
      parallel = region_raster(spec, -4, 4, -0.78, 0.78, 1201, 601,
                               ExecMode::Parallel);
    });
    t.identical = serial.in_region == parallel.in_region;
    report("region raster 1201x601", t);
  }

  {
    // demand schedule sweep, 512 prices
    BachelierSpec spec{StepFunction::constant(1.0, {1.0}),
                       StepFunction::constant(1.0, {0.0}),
                       StepFunction::constant_matrix(1.0, 1, {1.0}),
                       StepFunction::constant(1.0, {1.0})};
    ExpectationEngine quad;
    quad.quad_nodes = 64;
    ClaimSetup setup{MakerSpec{2.0, spec.sigma0(), spec.assets()},
                     InvestorSpec{2.0, spec.sigma1()}, spec.claim(), quad};
    std::vector<double> ps(512);
    for (std::size_t i = 0; i < ps.size(); ++i)
      ps[i] = -2.0 + 2.0 * static_cast<double>(i) / (ps.size() - 1);
    Timing t;
    std::vector<DemandPoint> serial, parallel;
    t.serial_ms =
        time_ms([&] { serial = demand_schedule(setup, ps, ExecMode::Serial); });
    t.parallel_ms = time_ms(
        [&] { parallel = demand_schedule(setup, ps, ExecMode::Parallel); });
    t.identical = true;
    for (std::size_t i = 0; i < ps.size(); ++i)
      t.identical = t.identical && serial[i].u_hat == parallel[i].u_hat;
    report("demand schedule (512 p)", t);
  }

  return 0;
}
