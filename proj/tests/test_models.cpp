#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "impact/gaussian.hpp"
#include "impact/models.hpp"
#include "oracle.hpp"

using namespace impact;

namespace {

BachelierSpec make_spec(double f, double psi, double T, double y = 1.0,
                        double g = 0.0) {
  return BachelierSpec{StepFunction::constant(T, {f}),
                       StepFunction::constant(T, {g}),
                       StepFunction::constant_matrix(T, 1, {psi}),
                       StepFunction::constant(T, {y})};
}

}  // namespace

TEST_CASE("bachelier_H: zero, closed form, inversion round trip") {
  BachelierSpec zero_f = make_spec(0.0, 1.0, 1.0);
  const double q0[] = {0.0};
  CHECK(bachelier_H(zero_f, 1.0, 0.3, q0)[0] == 0.0);

  // d=1, gamma=2, f=1, psi=1, q=3 -> -2(1+3) = -8
  BachelierSpec spec = make_spec(1.0, 1.0, 1.0);
  const double q3[] = {3.0};
  CHECK(bachelier_H(spec, 2.0, 0.5, q3)[0] == doctest::Approx(-8.0));

  // the generated strategy maps back to the demand that produced it
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double q[] = {u(gen)};
    const auto h_q = bachelier_H(spec, 2.0, 0.1, q);
    const auto h_0 = bachelier_H(spec, 2.0, 0.1, q0);
    const double pi[] = {h_q[0] - h_0[0]};
    const auto back = bachelier_demand_for_strategy(spec, 2.0, 0.1, pi);
    CHECK(back[0] == doctest::Approx(q[0]).epsilon(1e-12));
  }
}

TEST_CASE("bachelier_H is affine in q") {
  BachelierSpec spec{StepFunction::constant(1.0, {0.4, -0.2}),
                     StepFunction::constant(1.0, {0.0, 0.0}),
                     StepFunction::constant_matrix(1.0, 2, {1.0, 0.3, -0.1, 0.8}),
                     std::nullopt};
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double qa[] = {u(gen), u(gen)};
    const double qb[] = {u(gen), u(gen)};
    const double lam = 0.5 * (1.0 + u(gen) / 2.0);
    double qm[2];
    for (int i = 0; i < 2; ++i) qm[i] = lam * qa[i] + (1 - lam) * qb[i];
    const auto ha = bachelier_H(spec, 1.3, 0.2, qa);
    const auto hb = bachelier_H(spec, 1.3, 0.2, qb);
    const auto hm = bachelier_H(spec, 1.3, 0.2, qm);
    for (int i = 0; i < 2; ++i)
      CHECK(hm[i] == doctest::Approx(lam * ha[i] + (1 - lam) * hb[i]).epsilon(1e-12));
  }
}

TEST_CASE("bachelier optimal strategy: zero, plug-in, securitized static case") {
  // g = (gamma/alpha) f -> alpha g - gamma f = 0
  {
    BachelierSpec spec = make_spec(1.0, 1.0, 1.0, 1.0, 0.5);
    const StepFunction q = bachelier_optimal_strategy(spec, 2.0, 4.0);
    for (int k = 0; k < q.intervals(); ++k) CHECK(q.value(k)[0] == doctest::Approx(0.0));
  }
  // d=1, psi=1, f=1, g=0, alpha=gamma=2 -> Q = -1/2
  {
    BachelierSpec spec = make_spec(1.0, 1.0, 1.0);
    const StepFunction q = bachelier_optimal_strategy(spec, 2.0, 2.0);
    CHECK(q.value(0)[0] == doctest::Approx(-0.5));
  }
  // f = psi k0, g = psi k1, k0=1, k1=3, alpha=gamma=1 -> (alpha k1 - gamma k0)/2 = 1
  {
    BachelierSpec spec = make_spec(1.0, 1.0, 1.0, 1.0, 3.0);
    const StepFunction q = bachelier_optimal_strategy(spec, 1.0, 1.0);
    CHECK(q.value(0)[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("digital_H: zero demand, analytic derivative, interval limits") {
  DigitalSpec spec{1.0, 1.0};
  CHECK(digital_H(spec, 0.2, 0.4, 0.0) == 0.0);

  // finite difference of v in b matches -H at the pinned point
  const double h_fd = -oracle::central_diff(
      [&](double b) { return digital_v(spec, 0.0, b, 1.0); }, 0.3);
  CHECK(std::abs(h_fd - digital_H(spec, 0.0, 0.3, 1.0)) <= 1e-6);

  // ... and at 100 random points
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ut(0.0, 0.9), ub(-2.0, 2.0), uq(-3.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double t = ut(gen), b = ub(gen), q = uq(gen);
    const double fd = -oracle::central_diff(
        [&](double bb) { return digital_v(spec, t, bb, q); }, b);
    CHECK(std::abs(fd - digital_H(spec, t, b, q)) <= 1e-6);
  }

  // strictly decreasing in q (the monotone direction implied by v's form)
  std::uniform_real_distribution<double> dq(0.01, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double t = ut(gen), b = ub(gen);
    const double q1 = uq(gen);
    const double q2 = q1 + dq(gen);
    CHECK(digital_H(spec, t, b, q1) > digital_H(spec, t, b, q2));
  }

  // extreme demands approach the endpoints but never attain them; the gap is
  // of order e^{-gamma q}, so strictness is resolvable in doubles at q = 30
  for (double b : {-1.0, 0.0, 0.7}) {
    const Interval iv = digital_constraint_interval(spec, 0.0, b);
    CHECK(digital_H(spec, 0.0, b, 30.0) > iv.lo);
    CHECK(digital_H(spec, 0.0, b, -30.0) < iv.hi);
    const double h_pos = digital_H(spec, 0.0, b, 50.0);
    const double h_neg = digital_H(spec, 0.0, b, -50.0);
    CHECK(h_pos >= iv.lo);
    CHECK(h_neg <= iv.hi);
    CHECK(h_pos == doctest::Approx(iv.lo).epsilon(1e-12));  // q -> +inf limit
    CHECK(h_neg == doctest::Approx(iv.hi).epsilon(1e-12));  // q -> -inf limit
  }
}

TEST_CASE("digital constraint interval: symmetric value at b=0, tail asymptotics") {
  DigitalSpec spec{1.0, 1.0};
  const Interval iv = digital_constraint_interval(spec, 0.0, 0.0);
  // 2 phi(0) = 0.7978845608028654
  CHECK(iv.lo == doctest::Approx(-0.7978845608028654).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(0.7978845608028654).epsilon(1e-12));

  // H stays strictly inside for finite q (up to double resolution)
  for (double q : {-30.0, -1.0, 1.0, 30.0}) {
    const double h = digital_H(spec, 0.0, 0.0, q);
    CHECK(h > iv.lo);
    CHECK(h < iv.hi);
  }

  // b -> +inf: the q->-inf side collapses like phi/Phi -> 0 while the
  // q->+inf side grows like -b/sqrt(tau) (Mills ratio)
  const Interval tail = digital_constraint_interval(spec, 0.0, 8.0);
  CHECK(std::abs(tail.hi) < 1e-13);
  CHECK(tail.lo == doctest::Approx(-8.0).epsilon(0.02));
}

TEST_CASE("two-dimensional region: slice, band, non-convexity, symmetry") {
  TwoDDigitalSpec spec{1.0, 0.0, 0.0, 0.0};
  const Interval band = twod_p2_band(spec);
  CHECK(band.lo == doctest::Approx(-2.0 * norm_pdf(0.0)).epsilon(1e-12));
  CHECK(band.hi == doctest::Approx(2.0 * norm_pdf(0.0)).epsilon(1e-12));

  // p2 = 0 slice is entirely inside
  for (double p1 : {-5.0, -1.0, 0.0, 0.3, 4.0})
    CHECK(twod_region_membership(spec, p1, 0.0).in_region);

  // outside the band: false
  CHECK_FALSE(twod_region_membership(spec, 0.0, band.hi + 0.1).in_region);
  CHECK_FALSE(twod_region_membership(spec, 0.0, band.lo - 0.1).in_region);

  // at the singularity: false with the boundary flag
  const Membership sing = twod_region_membership(spec, 0.0, band.hi);
  CHECK_FALSE(sing.in_region);
  CHECK(sing.boundary_flag);

  // non-convexity: true-false-true along a p1 line near the band edge
  const double p2 = 0.9 * band.hi;
  CHECK(twod_region_membership(spec, -4.0, p2).in_region);
  CHECK_FALSE(twod_region_membership(spec, 0.0, p2).in_region);
  CHECK(twod_region_membership(spec, 4.0, p2).in_region);

  // membership depends on p1 only through (tau p1 - b1)^2
  TwoDDigitalSpec off{1.0, 0.0, 0.4, -0.3};
  const double tau = off.horizon - off.t;
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> up1(-5.0, 5.0);
  const Interval offband = twod_p2_band(off);
  std::uniform_real_distribution<double> up2(0.99 * offband.lo, 0.99 * offband.hi);
  for (int rep = 0; rep < 50; ++rep) {
    const double p1 = up1(gen);
    const double p2r = up2(gen);
    const double mirrored = 2.0 * off.b1 / tau - p1;
    CHECK(twod_region_membership(off, p1, p2r).in_region ==
          twod_region_membership(off, mirrored, p2r).in_region);
  }
}

TEST_CASE("region raster matches pointwise membership and shows the figure's shape") {
  TwoDDigitalSpec spec{1.0, 0.0, 0.0, 0.0};
  const Interval band = twod_p2_band(spec);
  const Raster raster = region_raster(spec, -4.0, 4.0, 0.98 * band.lo,
                                      0.98 * band.hi, 101, 61);
  // spot-check against the membership oracle
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 200; ++rep) {
    const int i1 = static_cast<int>(gen() % raster.p1.size());
    const int i2 = static_cast<int>(gen() % raster.p2.size());
    CHECK(raster.at(i2, i1) ==
          twod_region_membership(spec, raster.p1[i1], raster.p2[i2]).in_region);
  }
  // p2 = 0 row fully inside
  const int mid = 30;
  CHECK(raster.p2[mid] == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t i = 0; i < raster.p1.size(); ++i) CHECK(raster.at(mid, i));
  // a collinear true-false-true triple exists (non-convex region)
  bool found = false;
  for (std::size_t j = 0; j < raster.p2.size() && !found; ++j) {
    bool some_true_before = false, some_false = false;
    for (std::size_t i = 0; i < raster.p1.size(); ++i) {
      const bool in = raster.at(static_cast<int>(j), static_cast<int>(i));
      if (in && some_false && some_true_before) found = true;
      if (in) some_true_before = true;
      if (!in && some_true_before) some_false = true;
    }
  }
  CHECK(found);
  // serial and parallel rasters are identical
  const Raster serial = region_raster(spec, -4.0, 4.0, 0.98 * band.lo,
                                      0.98 * band.hi, 101, 61, ExecMode::Serial);
  CHECK(raster.in_region == serial.in_region);
}

TEST_CASE("bachelier validation flags singular psi") {
  BachelierSpec bad{StepFunction::constant(1.0, {1.0, 0.0}),
                    StepFunction::constant(1.0, {0.0, 0.0}),
                    StepFunction::constant_matrix(1.0, 2, {1.0, 2.0, 2.0, 4.0}),
                    std::nullopt};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  BachelierSpec good = make_spec(1.0, 1.0, 1.0);
  CHECK(good.validate() == doctest::Approx(1.0));
}

TEST_CASE("exact-arbitrage corner case is reported") {
  // gamma f + gamma u y = alpha g with f=1, y=1, g=1, gamma=1, alpha=2, u=1
  BachelierSpec spec = make_spec(1.0, 1.0, 1.0, 1.0, 1.0);
  CHECK(bachelier_exact_arbitrage_case(spec, 1.0, 2.0, 1.0));
  CHECK_FALSE(bachelier_exact_arbitrage_case(spec, 1.0, 2.0, 1.1));
}
