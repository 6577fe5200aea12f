#include "impact/step_function.hpp"

#include <algorithm>
#include <cmath>

#include "impact/errors.hpp"

namespace impact {

StepFunction::StepFunction(TimeGrid grid, int rows, int cols,
                           std::vector<double> data)
    : grid_(std::move(grid)), rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows_ < 1 || cols_ < 1) throw ConfigError("step function: bad dimensions");
  const std::size_t expected =
      static_cast<std::size_t>(grid_.n_steps()) * rows_ * cols_;
  if (data_.size() != expected)
    throw ConfigError("step function: value count does not match grid/dims");
  for (double v : data_)
    if (!std::isfinite(v)) throw ConfigError("step function: non-finite value");
}

StepFunction StepFunction::constant(double horizon, std::vector<double> value) {
  const int d = static_cast<int>(value.size());
  return StepFunction(TimeGrid::uniform(horizon, 1), d, 1, std::move(value));
}

StepFunction StepFunction::constant_matrix(double horizon, int d,
                                           std::vector<double> value) {
  return StepFunction(TimeGrid::uniform(horizon, 1), d, d, std::move(value));
}

std::span<const double> StepFunction::value(int interval) const {
  const std::size_t block = static_cast<std::size_t>(rows_) * cols_;
  return {data_.data() + block * interval, block};
}

std::span<const double> StepFunction::value_at(double t) const {
  const auto& nodes = grid_.nodes();
  // interval i covers [t_i, t_{i+1}); t >= T clamps to the last interval
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  int idx = static_cast<int>(it - nodes.begin()) - 1;
  idx = std::clamp(idx, 0, grid_.n_steps() - 1);
  return value(idx);
}

StepFunction StepFunction::column(int j) const {
  std::vector<double> data(static_cast<std::size_t>(intervals()) * rows_);
  for (int k = 0; k < intervals(); ++k) {
    auto block = value(k);
    for (int i = 0; i < rows_; ++i)
      data[static_cast<std::size_t>(k) * rows_ + i] = block[i * cols_ + j];
  }
  return StepFunction(grid_, rows_, 1, std::move(data));
}

namespace {

void require_same_horizon(const StepFunction& a, const StepFunction& b) {
  const double t = std::max(std::abs(a.horizon()), std::abs(b.horizon()));
  if (std::abs(a.horizon() - b.horizon()) > 1e-12 * std::max(1.0, t))
    throw ConfigError("step functions: horizons differ");
}

}  // namespace

std::vector<double> merge_breakpoints(const StepFunction& a,
                                      const StepFunction& b) {
  require_same_horizon(a, b);
  const auto& na = a.grid().nodes();
  const auto& nb = b.grid().nodes();
  std::vector<double> merged;
  merged.reserve(na.size() + nb.size());
  std::merge(na.begin(), na.end(), nb.begin(), nb.end(),
             std::back_inserter(merged));
  const double eps = 1e-14 * std::max(1.0, a.horizon());
  std::vector<double> out;
  out.reserve(merged.size());
  for (double t : merged)
    if (out.empty() || t - out.back() > eps) out.push_back(t);
  out.back() = a.horizon();
  return out;
}

double integral_dot(const StepFunction& a, const StepFunction& b) {
  if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows())
    throw ConfigError("integral_dot: expects vector step functions of equal dim");
  const auto nodes = merge_breakpoints(a, b);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double lo = nodes[k], hi = nodes[k + 1];
    const auto va = a.value_at(lo);
    const auto vb = b.value_at(lo);
    double dot = 0.0;
    for (int i = 0; i < a.rows(); ++i) dot += va[i] * vb[i];
    acc += dot * (hi - lo);
  }
  return acc;
}

double integral_sq(const StepFunction& a) { return integral_dot(a, a); }

std::vector<double> integral(const StepFunction& a) {
  if (a.cols() != 1) throw ConfigError("integral: expects a vector step function");
  std::vector<double> acc(a.rows(), 0.0);
  for (int k = 0; k < a.intervals(); ++k) {
    const auto v = a.value(k);
    const double dt = a.grid().dt(k);
    for (int i = 0; i < a.rows(); ++i) acc[i] += v[i] * dt;
  }
  return acc;
}

StepFunction linear_combine(double ca, const StepFunction& a, double cb,
                            const StepFunction& b) {
  if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows())
    throw ConfigError("linear_combine: expects vector step functions of equal dim");
  const auto nodes = merge_breakpoints(a, b);
  const int n = static_cast<int>(nodes.size()) - 1;
  std::vector<double> data(static_cast<std::size_t>(n) * a.rows());
  for (int k = 0; k < n; ++k) {
    const auto va = a.value_at(nodes[k]);
    const auto vb = b.value_at(nodes[k]);
    for (int i = 0; i < a.rows(); ++i)
      data[static_cast<std::size_t>(k) * a.rows() + i] = ca * va[i] + cb * vb[i];
  }
  return StepFunction(TimeGrid::from_nodes(nodes), a.rows(), 1, std::move(data));
}

}  // namespace impact
