#pragma once

#include <optional>
#include <span>
#include <vector>

#include "impact/maker.hpp"
#include "impact/step_function.hpp"

namespace impact {

// Bachelier family: Sigma_0 = int f'dB, Sigma_1 = int g'dB, Psi = int psi'dB
// with invertible psi, optionally a claim h = int y'dB.
struct BachelierSpec {
  StepFunction f;                 // d-vector
  StepFunction g;                 // d-vector
  StepFunction psi;               // d x d, invertible on every interval
  std::optional<StepFunction> y;  // d-vector claim integrand

  int dim() const { return f.rows(); }
  double horizon() const { return f.horizon(); }

  // throws on singular psi; returns the worst per-interval condition estimate
  double validate() const;

  PayoffExpr sigma0() const;
  PayoffExpr sigma1() const;
  std::vector<PayoffExpr> assets() const;
  PayoffExpr claim() const;  // requires y
};

// H_t(q) = -gamma (f_t + psi_t q); affine in q, so K_t = R^d.
std::vector<double> bachelier_H(const BachelierSpec& spec, double gamma,
                                double t, std::span<const double> q);

// inverse map: the demand generating a given strategy, Q_t = -(gamma psi_t)^{-1} pi_t
std::vector<double> bachelier_demand_for_strategy(const BachelierSpec& spec,
                                                  double gamma, double t,
                                                  std::span<const double> pi);

// Optimal deterministic demand Q_t = (1/(alpha+gamma)) psi_t^{-1}(alpha g - gamma f)
StepFunction bachelier_optimal_strategy(const BachelierSpec& spec, double gamma,
                                        double alpha);

// The exact-arbitrage corner case: gamma f + gamma u y - alpha g vanishes in L2.
bool bachelier_exact_arbitrage_case(const BachelierSpec& spec, double gamma,
                                    double alpha, double u,
                                    double tol = 1e-12);

class BachelierHProvider final : public HProvider {
 public:
  BachelierHProvider(BachelierSpec spec, double gamma);
  int brownian_dim() const override { return spec_.dim(); }
  int demand_dim() const override { return spec_.dim(); }
  void eval(double t, std::span<const double> state, std::span<const double> q,
            std::span<double> out) const override;

 private:
  BachelierSpec spec_;
  double gamma_;
};

// Digital claim on one Brownian coordinate: Sigma_0 = 0, Psi = 1_{B_T >= 0}.
struct DigitalSpec {
  double gamma = 1.0;
  double horizon = 1.0;
};

// v(t,b;q) = -log(e^{-gamma q} + Phi(-b/sqrt(tau))(1 - e^{-gamma q}))
double digital_v(const DigitalSpec& spec, double t, double b, double q);

// H_t(q) = -d/db v(t,b;q), evaluated analytically; strictly decreasing in q.
double digital_H(const DigitalSpec& spec, double t, double b, double q);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Open interval of attainable H values on {B_t = b}: the q -> +inf limit is
// the left endpoint, q -> -inf the right.
Interval digital_constraint_interval(const DigitalSpec& spec, double t,
                                     double b);

class DigitalHProvider final : public HProvider {
 public:
  explicit DigitalHProvider(DigitalSpec spec) : spec_(spec) {}
  int brownian_dim() const override { return 1; }
  int demand_dim() const override { return 1; }
  void eval(double t, std::span<const double> state, std::span<const double> q,
            std::span<double> out) const override {
    out[0] = digital_H(spec_, t, state[0], q[0]);
  }

 private:
  DigitalSpec spec_;
};

// Two-dimensional claim Psi = (B^1_T, B^1_T 1_{B^2_T >= 0}): the attainable
// set is closed but not convex.
struct TwoDDigitalSpec {
  double horizon = 1.0;
  double t = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
};

struct Membership {
  bool in_region = false;
  bool boundary_flag = false;  // p2 at a log singularity
};

Membership twod_region_membership(const TwoDDigitalSpec& spec, double p1,
                                  double p2);

// p2 band of the region: p2 in (-1/((1-A)C), 1/(AC))
Interval twod_p2_band(const TwoDDigitalSpec& spec);

struct Raster {
  std::vector<double> p1;  // axis values
  std::vector<double> p2;
  std::vector<std::uint8_t> in_region;  // p2-major rows, p1 within a row

  bool at(int i2, int i1) const {
    return in_region[static_cast<std::size_t>(i2) * p1.size() + i1] != 0;
  }
};

Raster region_raster(const TwoDDigitalSpec& spec, double p1_lo, double p1_hi,
                     double p2_lo, double p2_hi, int res1, int res2,
                     ExecMode exec = ExecMode::Parallel);

}  // namespace impact
