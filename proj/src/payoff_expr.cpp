#include "impact/payoff_expr.hpp"

#include <cmath>
#include <unordered_map>

#include "impact/errors.hpp"
#include "impact/linalg.hpp"

namespace impact {
namespace detail {

struct ExprNode {
  enum class Kind {
    Constant,
    LinearZ,
    StochInt,
    IndicatorZ,
    TerminalFn,
    Sum,
    Scale,
    Product
  };

  Kind kind;
  double scalar = 0.0;                      // Constant value / Scale factor
  std::vector<double> coeffs;               // LinearZ
  std::optional<StepFunction> integrand;    // StochInt
  int coord = -1;                           // IndicatorZ
  double level = 0.0;                       // IndicatorZ
  int fn_dim = 0;                           // TerminalFn
  double fn_horizon = 0.0;                  // TerminalFn
  std::function<double(std::span<const double>)> fn;
  std::vector<NodePtr> children;
};

}  // namespace detail

using detail::ExprNode;
using detail::NodePtr;
using Kind = ExprNode::Kind;

namespace {

void walk(const NodePtr& n, const std::function<void(const NodePtr&)>& visit) {
  visit(n);
  for (const auto& c : n->children) walk(c, visit);
}

}  // namespace

PayoffExpr::PayoffExpr() : PayoffExpr(constant(0.0)) {}

PayoffExpr::PayoffExpr(NodePtr node) : node_(std::move(node)) {}

PayoffExpr PayoffExpr::constant(double c) {
  if (!std::isfinite(c)) throw ConfigError("payoff: non-finite constant");
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Constant;
  n->scalar = c;
  return PayoffExpr(n);
}

PayoffExpr PayoffExpr::linear_z(std::vector<double> coeffs) {
  if (coeffs.empty()) throw ConfigError("payoff: linear form needs coefficients");
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::LinearZ;
  n->coeffs = std::move(coeffs);
  return PayoffExpr(n);
}

PayoffExpr PayoffExpr::stoch_integral(StepFunction integrand) {
  if (integrand.cols() != 1)
    throw ConfigError("payoff: stochastic integrand must be vector-valued");
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::StochInt;
  n->integrand = std::move(integrand);
  return PayoffExpr(n);
}

PayoffExpr PayoffExpr::indicator_z(int coord, double level) {
  if (coord < 0) throw ConfigError("payoff: indicator coordinate must be >= 0");
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::IndicatorZ;
  n->coord = coord;
  n->level = level;
  return PayoffExpr(n);
}

PayoffExpr PayoffExpr::indicator_terminal(int coord, double level,
                                          double horizon) {
  if (horizon <= 0.0) throw ConfigError("payoff: indicator horizon must be > 0");
  return indicator_z(coord, level / std::sqrt(horizon));
}

PayoffExpr PayoffExpr::terminal_function(
    int dim, double horizon, std::function<double(std::span<const double>)> f) {
  if (dim < 1 || horizon <= 0.0 || !f)
    throw ConfigError("payoff: bad terminal function leaf");
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::TerminalFn;
  n->fn_dim = dim;
  n->fn_horizon = horizon;
  n->fn = std::move(f);
  return PayoffExpr(n);
}

PayoffExpr PayoffExpr::operator-() const { return -1.0 * (*this); }

PayoffExpr operator+(const PayoffExpr& a, const PayoffExpr& b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Sum;
  n->children = {a.node(), b.node()};
  return PayoffExpr(n);
}

PayoffExpr operator-(const PayoffExpr& a, const PayoffExpr& b) {
  return a + (-1.0 * b);
}

PayoffExpr operator*(const PayoffExpr& a, const PayoffExpr& b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Product;
  n->children = {a.node(), b.node()};
  return PayoffExpr(n);
}

PayoffExpr operator*(double s, const PayoffExpr& a) {
  if (!std::isfinite(s)) throw ConfigError("payoff: non-finite scale");
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Scale;
  n->scalar = s;
  n->children = {a.node()};
  return PayoffExpr(n);
}

PayoffExpr operator+(const PayoffExpr& a, double c) {
  return a + PayoffExpr::constant(c);
}
PayoffExpr operator+(double c, const PayoffExpr& a) { return a + c; }
PayoffExpr operator-(const PayoffExpr& a, double c) { return a + (-c); }

int PayoffExpr::z_dim() const {
  int d = 0;
  walk(node_, [&](const NodePtr& n) {
    switch (n->kind) {
      case Kind::LinearZ:
        d = std::max(d, static_cast<int>(n->coeffs.size()));
        break;
      case Kind::IndicatorZ:
        d = std::max(d, n->coord + 1);
        break;
      case Kind::TerminalFn:
        d = std::max(d, n->fn_dim);
        break;
      default:
        break;
    }
  });
  return d;
}

bool PayoffExpr::has_integrals() const {
  bool any = false;
  walk(node_, [&](const NodePtr& n) { any |= (n->kind == Kind::StochInt); });
  return any;
}

bool PayoffExpr::is_deterministic() const {
  return z_dim() == 0 && !has_integrals();
}

// ---------------------------------------------------------------------------

GaussianBasis GaussianBasis::build(const PayoffExpr& expr) {
  return build(std::span<const PayoffExpr>{&expr, 1});
}

GaussianBasis GaussianBasis::build(std::span<const PayoffExpr> exprs) {
  GaussianBasis basis;
  bool have_horizon = false;
  auto note_horizon = [&](double t) {
    if (!have_horizon) {
      basis.horizon_ = t;
      have_horizon = true;
    } else if (std::abs(basis.horizon_ - t) > 1e-12 * std::max(1.0, t)) {
      throw ConfigError("payoff: leaves disagree on the horizon T");
    }
  };

  std::unordered_map<const ExprNode*, int> seen;
  for (const auto& e : exprs) {
    basis.z_dim_ = std::max(basis.z_dim_, e.z_dim());
    walk(e.node(), [&](const NodePtr& n) {
      if (n->kind == Kind::StochInt) {
        if (seen.emplace(n.get(), static_cast<int>(basis.leaves_.size())).second) {
          basis.leaves_.push_back(n.get());
          basis.keep_alive_.push_back(n);
        }
        note_horizon(n->integrand->horizon());
      } else if (n->kind == Kind::TerminalFn) {
        note_horizon(n->fn_horizon);
      }
    });
  }

  const int zd = basis.z_dim_;
  const int m = basis.coord_count();
  if (m == 0) {
    basis.rank_ = 0;
    return basis;
  }
  if (zd > 0 && !basis.leaves_.empty() && !have_horizon)
    throw ConfigError("payoff: internal horizon bookkeeping failure");

  // Brownian dimension implied by the leaves
  int bdim = zd;
  for (const auto* leaf : basis.leaves_)
    bdim = std::max(bdim, leaf->integrand->rows());

  std::vector<double> cov(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < zd; ++i) cov[i * m + i] = 1.0;
  const double sqrt_t = have_horizon ? std::sqrt(basis.horizon_) : 1.0;
  for (int j = 0; j < basis.integral_count(); ++j) {
    const auto& phi_j = *basis.leaves_[j]->integrand;
    if (phi_j.rows() > bdim)
      throw ConfigError("payoff: integrand dimension bookkeeping failure");
    const auto comp = integral(phi_j);  // componentwise integral of phi_j dt
    for (int i = 0; i < zd && i < static_cast<int>(comp.size()); ++i) {
      // Cov(Z_i, int phi' dB) = (1/sqrt(T)) int phi_i dt
      cov[i * m + (zd + j)] = comp[i] / sqrt_t;
      cov[(zd + j) * m + i] = cov[i * m + (zd + j)];
    }
    for (int k = 0; k <= j; ++k) {
      const auto& phi_k = *basis.leaves_[k]->integrand;
      double c = 0.0;
      if (phi_j.rows() == phi_k.rows()) {
        c = integral_dot(phi_j, phi_k);
      } else {
        // embed the lower-dimensional integrand: missing coords are zero
        const int r = std::min(phi_j.rows(), phi_k.rows());
        const auto nodes = merge_breakpoints(phi_j, phi_k);
        for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
          const auto vj = phi_j.value_at(nodes[s]);
          const auto vk = phi_k.value_at(nodes[s]);
          double dot = 0.0;
          for (int i = 0; i < r; ++i) dot += vj[i] * vk[i];
          c += dot * (nodes[s + 1] - nodes[s]);
        }
      }
      cov[(zd + j) * m + (zd + k)] = c;
      cov[(zd + k) * m + (zd + j)] = c;
    }
  }

  basis.rank_ = pivoted_cholesky(cov, m, 1e-12, basis.factor_);
  return basis;
}

const StepFunction& GaussianBasis::integrand(int j) const {
  return *leaves_[j]->integrand;
}

void GaussianBasis::transform(std::span<const double> xi,
                              std::span<double> coords) const {
  const int m = coord_count();
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k < rank_; ++k) s += factor_[i * rank_ + k] * xi[k];
    coords[i] = s;
  }
}

int GaussianBasis::leaf_index(const ExprNode* leaf) const {
  for (std::size_t j = 0; j < leaves_.size(); ++j)
    if (leaves_[j] == leaf) return static_cast<int>(j);
  throw ConfigError("payoff: expression not covered by this basis");
}

double GaussianBasis::eval(const PayoffExpr& expr,
                           std::span<const double> coords) const {
  return eval_node(*expr.node(), coords);
}

double GaussianBasis::eval_node(const ExprNode& n,
                                std::span<const double> coords) const {
  switch (n.kind) {
    case Kind::Constant:
      return n.scalar;
    case Kind::LinearZ: {
      double s = 0.0;
      for (std::size_t i = 0; i < n.coeffs.size(); ++i)
        s += n.coeffs[i] * coords[i];
      return s;
    }
    case Kind::StochInt:
      return coords[z_dim_ + leaf_index(&n)];
    case Kind::IndicatorZ:
      return coords[n.coord] >= n.level ? 1.0 : 0.0;
    case Kind::TerminalFn: {
      const double sqrt_t = std::sqrt(n.fn_horizon);
      double stack_b[8];
      std::vector<double> heap_b;
      double* b = stack_b;
      if (n.fn_dim > 8) {
        heap_b.resize(n.fn_dim);
        b = heap_b.data();
      }
      for (int i = 0; i < n.fn_dim; ++i) b[i] = sqrt_t * coords[i];
      return n.fn(std::span<const double>(b, n.fn_dim));
    }
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& c : n.children) s += eval_node(*c, coords);
      return s;
    }
    case Kind::Scale:
      return n.scalar * eval_node(*n.children[0], coords);
    case Kind::Product: {
      double p = 1.0;
      for (const auto& c : n.children) p *= eval_node(*c, coords);
      return p;
    }
  }
  throw ConfigError("payoff: corrupt expression node");
}

}  // namespace impact
