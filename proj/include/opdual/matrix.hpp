#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "opdual/errors.hpp"

namespace opdual {

/// Dense row-major matrix of doubles. The workhorse value type of the library;
/// everything at desk scale (dim up to a few hundred) goes through it.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major, rows*cols entries

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  DenseMatrix(std::size_t r, std::size_t c, std::initializer_list<double> entries)
      : rows(r), cols(c), a(entries) {
    if (a.size() != r * c) fail(errc::invalid, "entry count does not match shape");
  }

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static DenseMatrix zero(std::size_t r, std::size_t c) { return DenseMatrix(r, c); }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(const std::vector<double>& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  DenseMatrix column(std::size_t j) const {
    DenseMatrix c(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) c(i, 0) = (*this)(i, j);
    return c;
  }

  std::vector<double> column_vec(std::size_t j) const {
    std::vector<double> c(rows);
    for (std::size_t i = 0; i < rows; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void set_column(std::size_t j, const std::vector<double>& v) {
    for (std::size_t i = 0; i < rows; ++i) (*this)(i, j) = v[i];
  }

  bool finite() const {
    return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
  }
};

inline DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

inline DenseMatrix mul(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.cols != y.rows) fail(errc::invalid, "matrix product shape mismatch");
  DenseMatrix z(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < y.cols; ++j) z(i, j) += xik * y(k, j);
    }
  }
  return z;
}

inline DenseMatrix add(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) fail(errc::invalid, "matrix sum shape mismatch");
  DenseMatrix z = x;
  for (std::size_t i = 0; i < z.a.size(); ++i) z.a[i] += y.a[i];
  return z;
}

inline DenseMatrix sub(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) fail(errc::invalid, "matrix diff shape mismatch");
  DenseMatrix z = x;
  for (std::size_t i = 0; i < z.a.size(); ++i) z.a[i] -= y.a[i];
  return z;
}

inline DenseMatrix scaled(const DenseMatrix& x, double s) {
  DenseMatrix z = x;
  for (double& v : z.a) v *= s;
  return z;
}

inline std::vector<double> matvec(const DenseMatrix& m, const std::vector<double>& x) {
  if (m.cols != x.size()) fail(errc::invalid, "matrix-vector shape mismatch");
  std::vector<double> y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) y[i] += m(i, j) * x[j];
  return y;
}

inline double frobenius(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.a) s = std::max(s, std::abs(v));
  return s;
}

inline double symmetry_defect(const DenseMatrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.cols; ++j) s = std::max(s, std::abs(m(i, j) - m(j, i)));
  return s;
}

inline DenseMatrix hstack(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows != y.rows) fail(errc::invalid, "hstack row mismatch");
  DenseMatrix z(x.rows, x.cols + y.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) z(i, j) = x(i, j);
    for (std::size_t j = 0; j < y.cols; ++j) z(i, x.cols + j) = y(i, j);
  }
  return z;
}

inline DenseMatrix vstack(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.cols != y.cols) fail(errc::invalid, "vstack col mismatch");
  DenseMatrix z(x.rows + y.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) z(i, j) = x(i, j);
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) z(x.rows + i, j) = y(i, j);
  return z;
}

inline DenseMatrix block_diag(const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix z(x.rows + y.rows, x.cols + y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) z(i, j) = x(i, j);
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) z(x.rows + i, x.cols + j) = y(i, j);
  return z;
}

inline DenseMatrix submatrix(const DenseMatrix& m, std::size_t r0, std::size_t r1, std::size_t c0,
                             std::size_t c1) {
  DenseMatrix z(r1 - r0, c1 - c0);
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = c0; j < c1; ++j) z(i - r0, j - c0) = m(i, j);
  return z;
}

// vector helpers shared across modules

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

inline std::vector<double> axpy(double a, const std::vector<double>& x, std::vector<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
  return y;
}

inline std::vector<double> vsub(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  return z;
}

inline std::vector<double> vscale(double a, std::vector<double> x) {
  for (double& v : x) v *= a;
  return x;
}

inline std::vector<double> basis_vector(std::size_t dim, std::size_t i) {
  std::vector<double> e(dim, 0.0);
  e[i] = 1.0;
  return e;
}

}  // namespace opdual
