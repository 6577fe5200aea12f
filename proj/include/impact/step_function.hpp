#pragma once

#include <span>
#include <vector>

#include "impact/time_grid.hpp"

namespace impact {

// Piecewise-constant map t -> R^{rows x cols} on a TimeGrid (one value block
// per interval, left-continuous convention: interval i covers [t_i, t_{i+1})).
// All L2 integrals below are exact sums.
class StepFunction {
 public:
  StepFunction(TimeGrid grid, int rows, int cols, std::vector<double> data);

  // constant d-vector over [0, horizon]
  static StepFunction constant(double horizon, std::vector<double> value);
  // constant d x d matrix over [0, horizon]
  static StepFunction constant_matrix(double horizon, int d,
                                      std::vector<double> value);

  const TimeGrid& grid() const { return grid_; }
  double horizon() const { return grid_.horizon(); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int intervals() const { return grid_.n_steps(); }

  std::span<const double> value(int interval) const;
  std::span<const double> value_at(double t) const;  // t clamped into [0, T)

  StepFunction column(int j) const;  // j-th column as a vector step function

 private:
  TimeGrid grid_;
  int rows_;
  int cols_;
  std::vector<double> data_;  // interval-major, row-major blocks
};

// integral of a(t).b(t) dt over [0, T]; grids may differ but horizons must match
double integral_dot(const StepFunction& a, const StepFunction& b);
// integral of |a(t)|^2 dt
double integral_sq(const StepFunction& a);
// componentwise integral of a(t) dt
std::vector<double> integral(const StepFunction& a);

// ca*a + cb*b on the merged grid (vector-valued, equal rows)
StepFunction linear_combine(double ca, const StepFunction& a, double cb,
                            const StepFunction& b);

std::vector<double> merge_breakpoints(const StepFunction& a,
                                      const StepFunction& b);

}  // namespace impact
