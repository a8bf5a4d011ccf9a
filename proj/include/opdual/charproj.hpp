#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opdual/factorization.hpp"
#include "opdual/matrix.hpp"
#include "opdual/space.hpp"

namespace opdual {

/// The 2x2 block form of the orthogonal projection onto the closure of an
/// operator graph (or of any subspace) inside a direct sum. Idempotent and
/// selfadjoint for the block gram; the blocks encode the operator.
struct BlockProjection {
  DenseMatrix e11, e12, e21, e22;
  DirectSum ambient;

  DenseMatrix full() const { return vstack(hstack(e11, e12), hstack(e21, e22)); }

  double idempotent_residual() const {
    const DenseMatrix e = full();
    return frobenius(sub(mul(e, e), e)) / std::max(1.0, frobenius(e));
  }

  double selfadjoint_residual() const {
    const DenseMatrix ge = mul(ambient.space().gram, full());
    return symmetry_defect(ge) / std::max(1.0, max_abs(ge));
  }
};

inline BlockProjection blocks_of(const DenseMatrix& e, const DirectSum& ambient) {
  const std::size_t n1 = ambient.first.dim, n2 = ambient.second.dim;
  return BlockProjection{submatrix(e, 0, n1, 0, n1), submatrix(e, 0, n1, n1, n1 + n2),
                         submatrix(e, n1, n1 + n2, 0, n1), submatrix(e, n1, n1 + n2, n1, n1 + n2),
                         ambient};
}

/// E11 = (I+T*T)^{-1}, E21 = T E11, E12 = T*(I+TT*)^{-1}, E22 = T E12,
/// with the gram-aware adjoint throughout. The inverses are taken through
/// the SPD systems G1(I+T*T) and G2(I+TT*).
inline BlockProjection char_projection(const OperatorBetween& t) {
  const OperatorBetween ts = adjoint(t);
  const std::size_t n1 = t.domain.dim, n2 = t.codomain.dim;
  const DenseMatrix s1 = add(DenseMatrix::identity(n1), mul(ts.matrix, t.matrix));
  const DenseMatrix s2 = add(DenseMatrix::identity(n2), mul(t.matrix, ts.matrix));

  // (I+T*T)^{-1} = solve (G1 S1) X = G1; G1 S1 = G1 + T^T G2 T is SPD.
  const DenseMatrix g1s1 = mul(t.domain.gram, s1);
  const DenseMatrix e11 = cholesky_solve_matrix(cholesky_spd(g1s1), t.domain.gram);
  const DenseMatrix g2s2 = mul(t.codomain.gram, s2);
  const DenseMatrix s2inv = cholesky_solve_matrix(cholesky_spd(g2s2), t.codomain.gram);

  const DenseMatrix e21 = mul(t.matrix, e11);
  const DenseMatrix e12 = mul(ts.matrix, s2inv);
  const DenseMatrix e22 = mul(t.matrix, e12);
  return BlockProjection{e11, e12, e21, e22, DirectSum{t.domain, t.codomain}};
}

/// Projection for the adjoint graph on the swapped sum,
/// [[I-E22, E21],[E12, I-E11]].
inline BlockProjection char_projection_of_adjoint(const BlockProjection& e) {
  const std::size_t n1 = e.ambient.first.dim, n2 = e.ambient.second.dim;
  return BlockProjection{sub(DenseMatrix::identity(n2), e.e22), e.e21, e.e12,
                         sub(DenseMatrix::identity(n1), e.e11), e.ambient.swapped()};
}

struct StoneReport {
  std::vector<std::pair<std::string, double>> residuals;
  double max_residual = 0.0;

  void push(std::string name, double r) {
    max_residual = std::max(max_residual, r);
    residuals.emplace_back(std::move(name), r);
  }
};

/// Residuals of the block identities tying T to its projection: the four
/// mapping identities plus the closed-form block expressions, each computed
/// by an independent route and compared entry-wise.
inline StoneReport stone_identities(const OperatorBetween& t, const BlockProjection& e) {
  const OperatorBetween ts = adjoint(t);
  const std::size_t n1 = t.domain.dim, n2 = t.codomain.dim;
  const DenseMatrix i1 = DenseMatrix::identity(n1), i2 = DenseMatrix::identity(n2);
  const double scale = std::max(1.0, operator_norm(t));

  StoneReport rep;
  auto res = [&](const DenseMatrix& lhs, const DenseMatrix& rhs) {
    return frobenius(sub(lhs, rhs)) / scale;
  };
  rep.push("T E11 = E21", res(mul(t.matrix, e.e11), e.e21));
  rep.push("T E12 = E22", res(mul(t.matrix, e.e12), e.e22));
  rep.push("T* (I-E22) = E12", res(mul(ts.matrix, sub(i2, e.e22)), e.e12));
  rep.push("T* E21 = I-E11", res(mul(ts.matrix, e.e21), sub(i1, e.e11)));

  // closed-form block expressions recomputed from scratch
  const DenseMatrix s1 = add(i1, mul(ts.matrix, t.matrix));
  const DenseMatrix s2 = add(i2, mul(t.matrix, ts.matrix));
  const DenseMatrix s1inv = cholesky_solve_matrix(cholesky_spd(mul(t.domain.gram, s1)), t.domain.gram);
  const DenseMatrix s2inv =
      cholesky_solve_matrix(cholesky_spd(mul(t.codomain.gram, s2)), t.codomain.gram);
  rep.push("E12 = (I+T*T)^-1 T*", res(mul(s1inv, ts.matrix), e.e12));
  rep.push("E21 = (I+TT*)^-1 T", res(mul(s2inv, t.matrix), e.e21));
  rep.push("E22 = I - (I+TT*)^-1", res(sub(i2, s2inv), e.e22));
  rep.push("E22 = T (I+T*T)^-1 T*", res(mul(t.matrix, mul(s1inv, ts.matrix)), e.e22));
  return rep;
}

struct SchurComplements {
  DenseMatrix over_e11;  // E22 - E21 E11^{-1} E12
  DenseMatrix over_e22;  // E11 - E12 E22^{+} E21
  bool e22_pseudo_inverted = false;
};

/// Both Schur complements of the block projection. For projections of
/// everywhere-defined operators with trivial kernel both vanish. E22 gets the
/// eigen-thresholded pseudo-inverse when singular (flagged; strict mode
/// throws SingularBlock instead, and E11 must always be invertible).
inline SchurComplements schur_complements(const BlockProjection& e, bool strict = false,
                                          double kernel_rel = tol::kernel_rel) {
  const WeightedSpace& h1 = e.ambient.first;
  const WeightedSpace& h2 = e.ambient.second;

  const EigenDecomposition d11 = sym_eigen(e.e11, h1.gram);
  const double thr11 = kernel_rel * std::max(d11.max_abs_value(), 0.0);
  if (!d11.values.empty() && d11.values.front() <= thr11)
    fail(errc::singular_block, "E11 is singular");
  const DenseMatrix e11inv = pseudo_inverse_selfadjoint(e.e11, h1.gram, kernel_rel);

  SchurComplements out;
  const EigenDecomposition d22 = sym_eigen(e.e22, h2.gram);
  const double thr22 = kernel_rel * std::max(d22.max_abs_value(), 0.0);
  for (double v : d22.values)
    if (std::abs(v) <= thr22) out.e22_pseudo_inverted = true;
  if (e.e22.rows == 0) out.e22_pseudo_inverted = true;
  if (strict && out.e22_pseudo_inverted)
    fail(errc::singular_block, "E22 is singular; pseudo-inverse required");
  const DenseMatrix e22pinv = pseudo_inverse_selfadjoint(e.e22, h2.gram, kernel_rel);

  out.over_e11 = sub(e.e22, mul(e.e21, mul(e11inv, e.e12)));
  out.over_e22 = sub(e.e11, mul(e.e12, mul(e22pinv, e.e21)));
  return out;
}

/// Literal Cesaro mean (1/(n+1)) sum_{k=0..n} e22^k. Converges to the
/// projection onto ker(I-E22) at rate O(1/(n*gap)); diagnostic only.
inline DenseMatrix cesaro_mean(const DenseMatrix& e22, std::size_t n) {
  const std::size_t m = e22.rows;
  DenseMatrix acc = DenseMatrix::identity(m);
  DenseMatrix power = DenseMatrix::identity(m);
  for (std::size_t k = 1; k <= n; ++k) {
    power = mul(power, e22);
    acc = add(acc, power);
  }
  return scaled(acc, 1.0 / double(n + 1));
}

/// Ergodic limit of the powers of a PSD contraction by repeated squaring:
/// e22^(2^squarings), the projection onto the eigenvalue-one space. Same
/// limit as the Cesaro mean but with geometric convergence.
inline DenseMatrix power_limit(const DenseMatrix& e22, unsigned squarings = 14) {
  DenseMatrix p = e22;
  for (unsigned s = 0; s < squarings; ++s) p = mul(p, p);
  return p;
}

struct GraphAnalysis {
  BlockProjection projection;
  bool closable = false;
  std::size_t singular_dim = 0;
  DenseMatrix q_projection;  // onto ker(I-E22)^perp in H2
  std::optional<OperatorBetween> closable_part;
  double kernel_limit_residual = 0.0;  // eigen-threshold kernel projector vs ergodic limit
};

namespace detail {

// Modified Gram-Schmidt with one re-orthogonalization pass against the given
// gram; near-dependent columns are dropped. Deterministic column order.
inline DenseMatrix gram_orthonormalize(const DenseMatrix& cols, const WeightedSpace& space,
                                       double drop_rel = 1e-10) {
  std::vector<std::vector<double>> basis;
  double scale = 0.0;
  for (std::size_t j = 0; j < cols.cols; ++j)
    scale = std::max(scale, norm(space, cols.column_vec(j)));
  for (std::size_t j = 0; j < cols.cols; ++j) {
    std::vector<double> v = cols.column_vec(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v = axpy(-inner(space, b, v), b, v);
    const double nv = norm(space, v);
    if (nv <= drop_rel * std::max(scale, 1.0)) continue;
    basis.push_back(vscale(1.0 / nv, v));
  }
  DenseMatrix u(cols.rows, basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) u.set_column(j, basis[j]);
  return u;
}

}  // namespace detail

/// Orthogonal projection onto the span of generator columns in a direct sum,
/// the kernel of I-E22 (the singular part), and when the span is a graph the
/// operator reconstructed from the blocks. The maximal closable part solves
/// T E11 = Q E21 in the least-squares sense.
inline GraphAnalysis analyze_graph(const DenseMatrix& generators, const DirectSum& ambient,
                                   double kernel_one_tol = 1e-9) {
  const WeightedSpace total = ambient.space();
  if (generators.rows != total.dim) fail(errc::invalid, "generator rows do not match the sum");
  for (std::size_t j = 0; j < generators.cols; ++j)
    if (norm(total, generators.column_vec(j)) == 0.0)
      fail(errc::invalid, "zero generator column");

  const DenseMatrix u = detail::gram_orthonormalize(generators, total);
  const DenseMatrix proj = mul(u, mul(transpose(u), total.gram));

  GraphAnalysis out;
  out.projection = blocks_of(proj, ambient);
  const BlockProjection& e = out.projection;
  const WeightedSpace& h2 = ambient.second;

  // eigenvalue-one space of E22
  const EigenDecomposition d22 = sym_eigen(e.e22, h2.gram);
  DenseMatrix kernel(h2.dim, 0);
  for (std::size_t i = 0; i < d22.values.size(); ++i)
    if (std::abs(1.0 - d22.values[i]) <= kernel_one_tol) kernel = hstack(kernel, d22.vectors.column(i));
  out.singular_dim = kernel.cols;
  out.closable = out.singular_dim == 0;

  DenseMatrix ker_proj = DenseMatrix::zero(h2.dim, h2.dim);
  if (kernel.cols > 0) ker_proj = mul(kernel, mul(transpose(kernel), h2.gram));
  out.q_projection = sub(DenseMatrix::identity(h2.dim), ker_proj);

  // cross-check the thresholded kernel projector against the ergodic limit
  const DenseMatrix limit = power_limit(e.e22);
  out.kernel_limit_residual = frobenius(sub(limit, ker_proj));

  const DenseMatrix e11_pinv = pseudo_inverse_selfadjoint(e.e11, ambient.first.gram);
  const DenseMatrix t_clo = mul(mul(out.q_projection, e.e21), e11_pinv);
  out.closable_part = OperatorBetween{t_clo, ambient.first, ambient.second};
  return out;
}

/// The operator whose graph the analyzed span is; NotAGraph when a singular
/// part is present.
inline OperatorBetween require_operator(const GraphAnalysis& ga) {
  if (ga.singular_dim > 0) fail(errc::not_a_graph, "span contains vertical directions");
  return *ga.closable_part;
}

}  // namespace opdual
