#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "opdual/errors.hpp"
#include "opdual/matrix.hpp"

namespace opdual {

namespace tol {
// Module defaults. Callers may override per operation; the CLI maps --tol
// overrides onto these names.
inline constexpr double spd_pivot = 1e-12;       // relative to largest diagonal entry
inline constexpr double jacobi_off = 1e-13;      // off-diagonal Frobenius target, relative
inline constexpr double selfadjoint = 1e-10;     // gram*a symmetry pre-check
inline constexpr double kernel_rel = 1e-9;       // |lambda| <= kernel_rel * max|lambda|
inline constexpr double cg_rel = 1e-10;          // CG residual, relative to rhs
inline constexpr double rhs_orth = 1e-10;        // kernel-orthogonality of rhs
}  // namespace tol

/// Cholesky factor L (lower triangular) of an SPD matrix, L*L^T = m.
/// Throws NotSPD when a pivot falls at or below pivot_rel * max diagonal.
inline DenseMatrix cholesky_spd(const DenseMatrix& m, double pivot_rel = tol::spd_pivot) {
  if (m.rows != m.cols) fail(errc::not_spd, "matrix not square");
  const std::size_t n = m.rows;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
  const double floor = pivot_rel * std::max(max_diag, 1e-300);

  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= floor) fail(errc::not_spd, "nonpositive pivot at index " + std::to_string(j));
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Forward substitution, L y = b.
inline std::vector<double> solve_lower(const DenseMatrix& l, std::vector<double> b) {
  const std::size_t n = l.rows;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
    b[i] /= l(i, i);
  }
  return b;
}

/// Back substitution, L^T x = y.
inline std::vector<double> solve_lower_transposed(const DenseMatrix& l, std::vector<double> y) {
  const std::size_t n = l.rows;
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l(k, ii) * y[k];
    y[ii] /= l(ii, ii);
  }
  return y;
}

inline std::vector<double> cholesky_solve(const DenseMatrix& l, const std::vector<double>& b) {
  return solve_lower_transposed(l, solve_lower(l, b));
}

/// Solves (L L^T) X = B column-by-column.
inline DenseMatrix cholesky_solve_matrix(const DenseMatrix& l, const DenseMatrix& b) {
  DenseMatrix x(b.rows, b.cols);
  for (std::size_t j = 0; j < b.cols; ++j) x.set_column(j, cholesky_solve(l, b.column_vec(j)));
  return x;
}

inline DenseMatrix spd_inverse(const DenseMatrix& m, double pivot_rel = tol::spd_pivot) {
  return cholesky_solve_matrix(cholesky_spd(m, pivot_rel), DenseMatrix::identity(m.rows));
}

/// Eigendecomposition of an operator that is selfadjoint w.r.t. a gram matrix.
/// values ascending; vector columns gram-orthonormal.
struct EigenDecomposition {
  std::vector<double> values;
  DenseMatrix vectors;

  double max_abs_value() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }
};

namespace detail {

// Cyclic Jacobi with deterministic row-major sweeps on a symmetric matrix.
// Rotations accumulate into v; diag of c carries the eigenvalues at exit.
inline void jacobi_cyclic(DenseMatrix& c, DenseMatrix& v, double off_rel) {
  const std::size_t n = c.rows;
  v = DenseMatrix::identity(n);
  if (n < 2) return;
  const double scale = std::max(1.0, frobenius(c));
  const double target = off_rel * scale;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * c(i, j) * c(i, j);
    if (std::sqrt(off) <= target) return;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = c(p, q);
        if (std::abs(apq) <= 1e-3 * target / double(n * n)) continue;
        const double h = c(q, q) - c(p, p);
        double t;
        if (std::abs(apq) * 1e15 < std::abs(h)) {
          t = apq / h;  // small-angle shortcut, same as the full formula to rounding
        } else {
          const double theta = 0.5 * h / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * cs;
        const double tau = sn / (1.0 + cs);

        const double delta = t * apq;
        c(p, p) -= delta;
        c(q, q) += delta;
        c(p, q) = 0.0;
        c(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double g = c(k, p);
          const double hh = c(k, q);
          c(k, p) = g - sn * (hh + g * tau);
          c(p, k) = c(k, p);
          c(k, q) = hh + sn * (g - hh * tau);
          c(q, k) = c(k, q);
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double g = v(k, p);
          const double hh = v(k, q);
          v(k, p) = g - sn * (hh + g * tau);
          v(k, q) = hh + sn * (g - hh * tau);
        }
      }
    }
  }
  fail(errc::no_convergence, "jacobi sweeps exhausted");
}

}  // namespace detail

/// Generalized symmetric eigenproblem a*v = lambda*v with v gram-orthonormal.
/// Requires gram SPD and a selfadjoint w.r.t. gram (gram*a symmetric).
/// Reduction: gram = L L^T, C = L^T a L^{-T} symmetric, then cyclic Jacobi.
inline EigenDecomposition sym_eigen(const DenseMatrix& a, const DenseMatrix& gram,
                                    double selfadjoint_tol = tol::selfadjoint,
                                    double off_rel = tol::jacobi_off) {
  if (a.rows != a.cols || gram.rows != gram.cols || a.rows != gram.rows)
    fail(errc::invalid, "sym_eigen shape mismatch");
  const std::size_t n = a.rows;
  const DenseMatrix ga = mul(gram, a);
  const double scale = std::max(1.0, max_abs(ga));
  if (symmetry_defect(ga) > selfadjoint_tol * scale)
    fail(errc::not_selfadjoint, "operator is not selfadjoint for the supplied gram");
  const DenseMatrix l = cholesky_spd(gram);

  // C = L^T a L^{-T}: first Y = a L^{-T} (solve L^T per row of a), then L^T Y.
  DenseMatrix y(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = a(i, j);
    // row of a times L^{-T} equals solving L z = row (transposed view)
    std::vector<double> z = solve_lower(l, row);
    for (std::size_t j = 0; j < n; ++j) y(i, j) = z[j];
  }
  DenseMatrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += l(k, i) * y(k, j);
      c(i, j) = s;
    }
  // symmetrize against factorization rounding
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = m;
      c(j, i) = m;
    }

  DenseMatrix w;
  detail::jacobi_cyclic(c, w, off_rel);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return c(i, i) < c(j, j); });

  EigenDecomposition dec;
  dec.values.resize(n);
  dec.vectors = DenseMatrix(n, n);
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t j = order[jj];
    dec.values[jj] = c(j, j);
    dec.vectors.set_column(jj, solve_lower_transposed(l, w.column_vec(j)));
  }
  return dec;
}

/// Gram-orthonormal basis of ker(m), thresholded at kernel_rel * max|lambda|.
inline DenseMatrix null_space(const DenseMatrix& m, const DenseMatrix& gram,
                              double kernel_rel = tol::kernel_rel) {
  const EigenDecomposition dec = sym_eigen(m, gram);
  const double thr = kernel_rel * std::max(dec.max_abs_value(), 0.0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dec.values.size(); ++i)
    if (std::abs(dec.values[i]) <= thr) keep.push_back(i);
  DenseMatrix basis(m.rows, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) basis.set_column(j, dec.vectors.column_vec(keep[j]));
  return basis;
}

/// f applied to the spectrum: V f(Lambda) V^T gram. Identity f reproduces m.
inline DenseMatrix spectral_function(const DenseMatrix& m, const DenseMatrix& gram,
                                     const std::function<double(double)>& f) {
  const EigenDecomposition dec = sym_eigen(m, gram);
  const std::size_t n = m.rows;
  DenseMatrix scaled_v(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double fj = f(dec.values[j]);
    for (std::size_t i = 0; i < n; ++i) scaled_v(i, j) = dec.vectors(i, j) * fj;
  }
  return mul(scaled_v, mul(transpose(dec.vectors), gram));
}

/// Thresholded pseudo-inverse of a gram-selfadjoint matrix.
inline DenseMatrix pseudo_inverse_selfadjoint(const DenseMatrix& m, const DenseMatrix& gram,
                                              double kernel_rel = tol::kernel_rel) {
  const EigenDecomposition dec = sym_eigen(m, gram);
  const double thr = kernel_rel * std::max(dec.max_abs_value(), 0.0);
  const std::size_t n = m.rows;
  DenseMatrix scaled_v(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lj = dec.values[j];
    const double fj = (std::abs(lj) > thr && lj != 0.0) ? 1.0 / lj : 0.0;
    for (std::size_t i = 0; i < n; ++i) scaled_v(i, j) = dec.vectors(i, j) * fj;
  }
  return mul(scaled_v, mul(transpose(dec.vectors), gram));
}

/// Square root of a PSD gram-selfadjoint matrix; tiny negative eigenvalues clamp to zero.
inline DenseMatrix sqrt_psd(const DenseMatrix& m, const DenseMatrix& gram) {
  return spectral_function(m, gram, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

/// Pseudo-inverse square root of a PSD gram-selfadjoint matrix.
inline DenseMatrix pinv_sqrt_psd(const DenseMatrix& m, const DenseMatrix& gram,
                                 double kernel_rel = tol::kernel_rel) {
  const EigenDecomposition dec = sym_eigen(m, gram);
  const double thr = kernel_rel * std::max(dec.max_abs_value(), 0.0);
  const std::size_t n = m.rows;
  DenseMatrix scaled_v(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lj = dec.values[j];
    const double fj = lj > thr ? 1.0 / std::sqrt(lj) : 0.0;
    for (std::size_t i = 0; i < n; ++i) scaled_v(i, j) = dec.vectors(i, j) * fj;
  }
  return mul(scaled_v, mul(transpose(dec.vectors), gram));
}

/// Euclidean Moore-Penrose pseudo-inverse of a general rectangular matrix,
/// via the eigendecomposition of m^T m. Reports rank deficiency to the caller.
inline DenseMatrix pseudo_inverse(const DenseMatrix& m, bool* rank_deficient = nullptr,
                                  double kernel_rel = tol::kernel_rel) {
  const DenseMatrix mtm = mul(transpose(m), m);
  const EigenDecomposition dec = sym_eigen(mtm, DenseMatrix::identity(mtm.rows));
  const double thr = kernel_rel * std::max(dec.max_abs_value(), 0.0);
  if (rank_deficient) {
    *rank_deficient = false;
    for (double v : dec.values)
      if (std::abs(v) <= thr) *rank_deficient = true;
  }
  const std::size_t n = mtm.rows;
  DenseMatrix scaled_v(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lj = dec.values[j];
    const double fj = lj > thr ? 1.0 / lj : 0.0;
    for (std::size_t i = 0; i < n; ++i) scaled_v(i, j) = dec.vectors(i, j) * fj;
  }
  // m^+ = (m^T m)^+ m^T
  return mul(mul(scaled_v, transpose(dec.vectors)), transpose(m));
}

/// Numerical rank of the column span of m measured in the given gram.
inline std::size_t gram_rank(const DenseMatrix& m, const DenseMatrix& gram,
                             double kernel_rel = tol::kernel_rel) {
  if (m.cols == 0) return 0;
  const DenseMatrix g = mul(transpose(m), mul(gram, m));
  const EigenDecomposition dec = sym_eigen(g, DenseMatrix::identity(g.rows));
  const double thr = kernel_rel * std::max(dec.max_abs_value(), 0.0);
  std::size_t r = 0;
  for (double v : dec.values)
    if (std::abs(v) > thr) ++r;
  return r;
}

}  // namespace opdual
