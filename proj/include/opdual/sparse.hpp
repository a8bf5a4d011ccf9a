#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "opdual/errors.hpp"
#include "opdual/matrix.hpp"

namespace opdual {

/// Symmetric sparse matrix stored as upper triplets (row <= col).
struct SparseSymmetric {
  struct Triplet {
    std::size_t row, col;
    double value;
  };

  std::size_t dim = 0;
  std::vector<Triplet> triplets;
};

inline SparseSymmetric make_sparse_symmetric(std::size_t dim,
                                             std::vector<SparseSymmetric::Triplet> triplets) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& t : triplets) {
    if (t.row > t.col) fail(errc::invalid, "triplet must have row <= col");
    if (t.col >= dim) fail(errc::invalid, "triplet index out of range");
    if (!seen.insert({t.row, t.col}).second) fail(errc::invalid, "duplicate triplet");
    if (!std::isfinite(t.value)) fail(errc::invalid, "nonfinite triplet value");
  }
  return SparseSymmetric{dim, std::move(triplets)};
}

inline std::vector<double> matvec(const SparseSymmetric& m, const std::vector<double>& x) {
  if (x.size() != m.dim) fail(errc::invalid, "sparse apply shape mismatch");
  std::vector<double> y(m.dim, 0.0);
  for (const auto& t : m.triplets) {
    y[t.row] += t.value * x[t.col];
    if (t.row != t.col) y[t.col] += t.value * x[t.row];
  }
  return y;
}

inline std::vector<double> diagonal_of(const SparseSymmetric& m) {
  std::vector<double> d(m.dim, 0.0);
  for (const auto& t : m.triplets)
    if (t.row == t.col) d[t.row] = t.value;
  return d;
}

inline DenseMatrix to_dense(const SparseSymmetric& m) {
  DenseMatrix d(m.dim, m.dim);
  for (const auto& t : m.triplets) {
    d(t.row, t.col) = t.value;
    if (t.row != t.col) d(t.col, t.row) = t.value;
  }
  return d;
}

struct SolveOptions {
  double rel_tol = 1e-10;
  std::size_t max_iter_factor = 10;  // cap = factor * dim
  bool diagonal_precondition = true;
  // Pin this coordinate to zero and solve on the complement: the grounded
  // case for Laplacians with the constants in their kernel. The rhs must be
  // orthogonal to constants (checked).
  std::optional<std::size_t> ground;
  double rhs_orth_tol = 1e-10;
};

namespace detail {

// Diagonally preconditioned CG restricted to the coordinates in `act`.
inline std::vector<double> cg_masked(const SparseSymmetric& m, const std::vector<double>& rhs,
                                     const std::vector<char>& act, const SolveOptions& opt) {
  const std::size_t n = m.dim;
  std::vector<double> dinv(n, 1.0);
  if (opt.diagonal_precondition) {
    const std::vector<double> d = diagonal_of(m);
    for (std::size_t i = 0; i < n; ++i)
      if (act[i] && d[i] > 0.0) dinv[i] = 1.0 / d[i];
  }
  auto mask = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i)
      if (!act[i]) v[i] = 0.0;
  };

  std::vector<double> b = rhs;
  mask(b);
  const double bnorm = norm2(b);
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0) return x;

  std::vector<double> r = b;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  mask(z);
  std::vector<double> p = z;
  double rz = dot(r, z);

  const std::size_t max_iter = std::max<std::size_t>(opt.max_iter_factor * n, 16);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::vector<double> ap = matvec(m, p);
    mask(ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) fail(errc::not_spd, "indefinite direction in CG");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (norm2(r) <= opt.rel_tol * bnorm) return x;
    for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    mask(z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  fail(errc::no_convergence, "CG iteration cap reached");
}

}  // namespace detail

/// Conjugate-gradient solve of an SPD system, residual <= rel_tol * |rhs|.
/// With opt.ground set, solves the grounded system (coordinate pinned to 0)
/// after checking that rhs is orthogonal to the constant kernel.
inline std::vector<double> solve_spd(const SparseSymmetric& m, const std::vector<double>& rhs,
                                     const SolveOptions& opt = {}) {
  if (rhs.size() != m.dim) fail(errc::invalid, "solve_spd shape mismatch");
  std::vector<char> act(m.dim, 1);
  if (opt.ground) {
    if (*opt.ground >= m.dim) fail(errc::invalid, "ground index out of range");
    double s = 0.0;
    for (double v : rhs) s += v;
    const double scale = std::max(norm2(rhs), 1e-300);
    if (std::abs(s) > opt.rhs_orth_tol * scale * std::sqrt(double(m.dim)))
      fail(errc::inconsistent_rhs, "rhs not orthogonal to the constant kernel");
    act[*opt.ground] = 0;
  }
  return detail::cg_masked(m, rhs, act, opt);
}

}  // namespace opdual
