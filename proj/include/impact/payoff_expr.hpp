#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "impact/step_function.hpp"

namespace impact {

namespace detail {
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;
}  // namespace detail

// Random variable over the terminal state of a d-dimensional Brownian path:
// leaves are constants, linear forms a'Z on the terminal standard Gaussian
// Z = B_T / sqrt(T), stochastic integrals of deterministic step functions,
// digital indicators, and pointwise functions of B_T; nodes are sums, scalar
// multiples and products. Immutable and cheap to copy; evaluation is
// thread-safe.
class PayoffExpr {
 public:
  PayoffExpr();  // constant 0

  static PayoffExpr constant(double c);
  static PayoffExpr linear_z(std::vector<double> coeffs);
  static PayoffExpr stoch_integral(StepFunction integrand);
  // 1_{Z_coord >= level}
  static PayoffExpr indicator_z(int coord, double level);
  // 1_{B^coord_T >= level}
  static PayoffExpr indicator_terminal(int coord, double level, double horizon);
  // f(B_T): the caller vouches for the integrability of everything built on it
  static PayoffExpr terminal_function(
      int dim, double horizon,
      std::function<double(std::span<const double>)> f);

  PayoffExpr operator-() const;
  friend PayoffExpr operator+(const PayoffExpr& a, const PayoffExpr& b);
  friend PayoffExpr operator-(const PayoffExpr& a, const PayoffExpr& b);
  friend PayoffExpr operator*(const PayoffExpr& a, const PayoffExpr& b);
  friend PayoffExpr operator*(double s, const PayoffExpr& a);
  friend PayoffExpr operator+(const PayoffExpr& a, double c);
  friend PayoffExpr operator+(double c, const PayoffExpr& a);
  friend PayoffExpr operator-(const PayoffExpr& a, double c);

  int z_dim() const;              // number of Z coordinates referenced
  bool has_integrals() const;
  bool is_deterministic() const;

  const detail::NodePtr& node() const { return node_; }

 private:
  explicit PayoffExpr(detail::NodePtr node);
  detail::NodePtr node_;
};

// Joint Gaussian coordinates needed by a family of expressions:
// (Z_1..Z_zd, I_1..I_m) with I_j the distinct stochastic-integral leaves.
// The covariance is factored (rank-revealing) so both backends can draw the
// coordinates from an r-dimensional standard Gaussian.
class GaussianBasis {
 public:
  static GaussianBasis build(std::span<const PayoffExpr> exprs);
  static GaussianBasis build(const PayoffExpr& expr);

  int rank() const { return rank_; }
  int z_dim() const { return z_dim_; }
  int coord_count() const { return z_dim_ + static_cast<int>(leaves_.size()); }
  int integral_count() const { return static_cast<int>(leaves_.size()); }
  // horizon shared by the integral / terminal leaves; 0 when none carry one
  double horizon() const { return horizon_; }
  const StepFunction& integrand(int j) const;

  // coords = factor * xi, xi standard Gaussian of size rank()
  void transform(std::span<const double> xi, std::span<double> coords) const;

  // evaluate an expression (which must be built from the same leaves) at the
  // given basis coordinates
  double eval(const PayoffExpr& expr, std::span<const double> coords) const;

 private:
  double eval_node(const detail::ExprNode& n,
                   std::span<const double> coords) const;
  int leaf_index(const detail::ExprNode* leaf) const;

  int z_dim_ = 0;
  int rank_ = 0;
  double horizon_ = 0.0;
  std::vector<const detail::ExprNode*> leaves_;  // distinct integral leaves
  std::vector<detail::NodePtr> keep_alive_;
  std::vector<double> factor_;  // coord_count x rank, row-major
};

}  // namespace impact
