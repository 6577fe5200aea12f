#pragma once

// Test-only oracles, kept independent of the library's evaluation path:
// closed-form Gaussian identities, trapezoid quadrature against the normal
// density (superalgebraic for smooth integrands), a brute-force Monte Carlo
// mean on std::mt19937_64, and central differences.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_density(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

// E[exp(a Z + b)] for Z ~ N(0,1)
inline double gaussian_mgf(double a, double b = 0.0) {
  return std::exp(0.5 * a * a + b);
}

// E[f(Z)] by trapezoid on [-12, 12]; Gaussian decay makes this effectively
// exact for smooth f at this resolution.
inline double gauss_expect(const std::function<double(double)>& f,
                           int n = 40001, double radius = 12.0) {
  const double h = 2.0 * radius / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -radius + i * h;
    double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * f(x) * normal_density(x);
  }
  return acc * h;
}

// E[f(Z1, Z2)] for independent standard normals.
inline double gauss_expect_2d(const std::function<double(double, double)>& f,
                              int n = 1201, double radius = 10.0) {
  const double h = 2.0 * radius / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -radius + i * h;
    const double wx = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    double inner = 0.0;
    for (int j = 0; j < n; ++j) {
      const double y = -radius + j * h;
      const double wy = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      inner += wy * f(x, y) * normal_density(y);
    }
    acc += wx * inner * normal_density(x);
  }
  return acc * h * h;
}

inline double mc_mean(const std::function<double(double)>& f, long paths,
                      unsigned long seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double acc = 0.0;
  for (long i = 0; i < paths; ++i) acc += f(normal(gen));
  return acc / static_cast<double>(paths);
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
