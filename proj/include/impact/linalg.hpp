#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace impact {

// Small dense row-major kernels; dimensions here are the Brownian dimension
// (a handful at most), so plain O(n^3) with partial pivoting is plenty.

struct LuFactor {
  int n = 0;
  std::vector<double> lu;   // packed L\U, row-major
  std::vector<int> perm;    // row permutation
  bool singular = false;
  double min_pivot = 0.0;
  double max_pivot = 0.0;
};

inline LuFactor lu_factor(std::span<const double> a, int n) {
  LuFactor f;
  f.n = n;
  f.lu.assign(a.begin(), a.end());
  f.perm.resize(n);
  for (int i = 0; i < n; ++i) f.perm[i] = i;
  f.min_pivot = std::numeric_limits<double>::infinity();
  f.max_pivot = 0.0;
  auto& m = f.lu;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(m[k * n + k]);
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(m[i * n + k]);
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m[k * n + j], m[piv * n + j]);
      std::swap(f.perm[k], f.perm[piv]);
    }
    const double d = m[k * n + k];
    f.min_pivot = std::min(f.min_pivot, std::abs(d));
    f.max_pivot = std::max(f.max_pivot, std::abs(d));
    if (d == 0.0) {
      f.singular = true;
      return f;
    }
    for (int i = k + 1; i < n; ++i) {
      const double l = m[i * n + k] / d;
      m[i * n + k] = l;
      for (int j = k + 1; j < n; ++j) m[i * n + j] -= l * m[k * n + j];
    }
  }
  return f;
}

inline void lu_solve(const LuFactor& f, std::span<const double> b,
                     std::span<double> x) {
  const int n = f.n;
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) x[i] -= f.lu[i * n + j] * x[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) x[i] -= f.lu[i * n + j] * x[j];
    x[i] /= f.lu[i * n + i];
  }
}

inline std::vector<double> lu_inverse(const LuFactor& f) {
  const int n = f.n;
  std::vector<double> inv(n * n, 0.0), e(n, 0.0), col(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    lu_solve(f, e, col);
    for (int i = 0; i < n; ++i) inv[i * n + j] = col[i];
  }
  return inv;
}

inline double one_norm(std::span<const double> a, int n) {
  double best = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(a[i * n + j]);
    best = std::max(best, s);
  }
  return best;
}

// Diagonal-pivoted Cholesky of a PSD matrix; returns the rank r and fills
// factor (m x r, rows in original order) with C ~= factor * factor'.
inline int pivoted_cholesky(std::span<const double> c, int m, double rel_tol,
                            std::vector<double>& factor) {
  std::vector<double> d(m);
  double max_diag = 0.0;
  for (int i = 0; i < m; ++i) {
    d[i] = c[i * m + i];
    max_diag = std::max(max_diag, d[i]);
  }
  const double tol = rel_tol * std::max(1.0, max_diag);
  factor.assign(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<int> done(m, 0);
  std::vector<int> pivots;
  int rank = 0;
  for (int col = 0; col < m; ++col) {
    int p = -1;
    double best = tol;
    for (int i = 0; i < m; ++i)
      if (!done[i] && d[i] > best) {
        best = d[i];
        p = i;
      }
    if (p < 0) break;
    const double root = std::sqrt(d[p]);
    factor[p * m + col] = root;
    for (int i = 0; i < m; ++i) {
      if (done[i] || i == p) continue;
      double s = c[i * m + p];
      for (int k = 0; k < col; ++k) s -= factor[i * m + k] * factor[p * m + k];
      const double l = s / root;
      factor[i * m + col] = l;
      d[i] -= l * l;
    }
    done[p] = 1;
    d[p] = 0.0;
    pivots.push_back(p);
    ++rank;
  }
  // shrink to m x rank
  std::vector<double> out(static_cast<std::size_t>(m) * rank);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < rank; ++k) out[i * rank + k] = factor[i * m + k];
  factor = std::move(out);
  return rank;
}

}  // namespace impact
