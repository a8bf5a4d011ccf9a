#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "opdual/errors.hpp"
#include "opdual/factorization.hpp"
#include "opdual/matrix.hpp"

namespace opdual {

/// A finite-dimensional Hilbert space: coordinates plus an SPD gram matrix.
/// inner(u,v) = u^T gram v. Stands in for every space in the library (l^2,
/// weighted L^2, energy spaces).
struct WeightedSpace {
  std::size_t dim = 0;
  DenseMatrix gram;
  std::string label;
};

inline WeightedSpace make_weighted_space(DenseMatrix gram, std::string label = "") {
  if (gram.rows != gram.cols) fail(errc::not_spd, "gram not square");
  if (!gram.finite()) fail(errc::invalid, "gram has nonfinite entries");
  if (symmetry_defect(gram) > 1e-12 * std::max(1.0, max_abs(gram)))
    fail(errc::not_spd, "gram not symmetric");
  cholesky_spd(gram);  // SPD gate
  const std::size_t n = gram.rows;
  return WeightedSpace{n, std::move(gram), std::move(label)};
}

inline WeightedSpace euclidean_space(std::size_t dim, std::string label = "") {
  return WeightedSpace{dim, DenseMatrix::identity(dim), std::move(label)};
}

inline double inner(const WeightedSpace& s, const std::vector<double>& u,
                    const std::vector<double>& v) {
  return dot(u, matvec(s.gram, v));
}

inline double norm(const WeightedSpace& s, const std::vector<double>& u) {
  return std::sqrt(std::max(0.0, inner(s, u, u)));
}

/// An operator together with its weighted domain and codomain. All adjoints
/// taken through this type are gram-aware.
struct OperatorBetween {
  DenseMatrix matrix;  // codomain.dim x domain.dim
  WeightedSpace domain;
  WeightedSpace codomain;
};

inline OperatorBetween make_operator(DenseMatrix matrix, WeightedSpace domain,
                                     WeightedSpace codomain) {
  if (matrix.rows != codomain.dim || matrix.cols != domain.dim)
    fail(errc::invalid, "operator shape does not match its spaces");
  return OperatorBetween{std::move(matrix), std::move(domain), std::move(codomain)};
}

inline std::vector<double> matvec(const OperatorBetween& t, const std::vector<double>& x) {
  return matvec(t.matrix, x);
}

/// Gram-aware adjoint: T^* = G1^{-1} T^T G2, satisfying <Tu,v>_2 = <u,T^*v>_1.
inline OperatorBetween adjoint(const OperatorBetween& t) {
  const DenseMatrix l = cholesky_spd(t.domain.gram);
  DenseMatrix rhs = mul(transpose(t.matrix), t.codomain.gram);
  return OperatorBetween{cholesky_solve_matrix(l, rhs), t.codomain, t.domain};
}

inline OperatorBetween compose(const OperatorBetween& a, const OperatorBetween& b) {
  if (a.domain.dim != b.codomain.dim) fail(errc::invalid, "composition shape mismatch");
  return OperatorBetween{mul(a.matrix, b.matrix), b.domain, a.codomain};
}

/// Largest generalized singular value, sqrt(lambda_max(T^* T)).
inline double operator_norm(const OperatorBetween& t) {
  const DenseMatrix tst = mul(adjoint(t).matrix, t.matrix);
  const EigenDecomposition dec = sym_eigen(tst, t.domain.gram);
  return std::sqrt(std::max(0.0, dec.values.empty() ? 0.0 : dec.values.back()));
}

/// H1 (+) H2 with the block-diagonal gram.
struct DirectSum {
  WeightedSpace first;
  WeightedSpace second;

  WeightedSpace space() const {
    return WeightedSpace{first.dim + second.dim, block_diag(first.gram, second.gram),
                         first.label + "+" + second.label};
  }

  DirectSum swapped() const { return DirectSum{second, first}; }

  std::vector<double> pack(const std::vector<double>& x, const std::vector<double>& y) const {
    std::vector<double> z(first.dim + second.dim, 0.0);
    for (std::size_t i = 0; i < first.dim; ++i) z[i] = x[i];
    for (std::size_t i = 0; i < second.dim; ++i) z[first.dim + i] = y[i];
    return z;
  }

  std::pair<std::vector<double>, std::vector<double>> split(const std::vector<double>& z) const {
    std::vector<double> x(z.begin(), z.begin() + first.dim);
    std::vector<double> y(z.begin() + first.dim, z.end());
    return {x, y};
  }
};

/// Columns [phi; T phi] spanning the graph of T inside domain (+) codomain.
inline DenseMatrix graph_subspace(const OperatorBetween& t) {
  return vstack(DenseMatrix::identity(t.domain.dim), t.matrix);
}

/// The flip [phi; psi] -> [-psi; phi] as an operator onto the swapped sum.
/// Applying the flip of the swapped sum after it gives -identity.
inline OperatorBetween v_flip(const DirectSum& ds) {
  const std::size_t n1 = ds.first.dim, n2 = ds.second.dim;
  DenseMatrix m(n1 + n2, n1 + n2);
  for (std::size_t i = 0; i < n2; ++i) m(i, n1 + i) = -1.0;
  for (std::size_t i = 0; i < n1; ++i) m(n2 + i, i) = 1.0;
  return OperatorBetween{std::move(m), ds.space(), ds.swapped().space()};
}

struct OrthogonalityReport {
  std::vector<double> residuals;  // one per basis pair, |<a_i, b_j>| / (|a_i||b_j|)
  double max_residual = 0.0;
  bool pass = false;
};

/// Checks that graph(T^*) is the gram-orthogonal complement of V graph(T)
/// inside the swapped direct sum.
inline OrthogonalityReport adjoint_graph_check(const OperatorBetween& t, double tolerance = 1e-9) {
  const DirectSum ds{t.domain, t.codomain};
  const OperatorBetween flip = v_flip(ds);
  const DenseMatrix flipped = mul(flip.matrix, graph_subspace(t));
  const DenseMatrix adj_graph = graph_subspace(adjoint(t));
  const DenseMatrix gram = ds.swapped().space().gram;

  OrthogonalityReport rep;
  const DenseMatrix cross = mul(transpose(adj_graph), mul(gram, flipped));
  for (std::size_t i = 0; i < cross.rows; ++i) {
    const double na = norm(ds.swapped().space(), adj_graph.column_vec(i));
    for (std::size_t j = 0; j < cross.cols; ++j) {
      const double nb = norm(ds.swapped().space(), flipped.column_vec(j));
      const double r = std::abs(cross(i, j)) / std::max(na * nb, 1e-300);
      rep.residuals.push_back(r);
      rep.max_residual = std::max(rep.max_residual, r);
    }
  }
  // dimension count: the two spans must fill the sum
  const std::size_t total = gram_rank(hstack(adj_graph, flipped), gram);
  rep.pass = rep.max_residual <= tolerance && total == t.domain.dim + t.codomain.dim;
  return rep;
}

/// A vector space D sitting inside two Hilbert spaces by coordinate maps.
/// basis columns span D in ambient coordinates; embed1/embed2 carry ambient
/// coordinates into H1/H2 coordinates.
struct CommonDomain {
  std::size_t ambient_dim = 0;
  DenseMatrix basis;  // ambient_dim x k
  OperatorBetween embed1;
  OperatorBetween embed2;

  const WeightedSpace& h1() const { return embed1.codomain; }
  const WeightedSpace& h2() const { return embed2.codomain; }
  DenseMatrix image1() const { return mul(embed1.matrix, basis); }
  DenseMatrix image2() const { return mul(embed2.matrix, basis); }
};

inline CommonDomain make_common_domain(DenseMatrix basis, OperatorBetween embed1,
                                       OperatorBetween embed2) {
  const std::size_t ambient = basis.rows;
  if (embed1.matrix.cols != ambient || embed2.matrix.cols != ambient)
    fail(errc::invalid, "embedding does not act on the ambient coordinates");
  if (basis.cols == 0) fail(errc::invalid, "common domain must have at least one generator");
  return CommonDomain{ambient, std::move(basis), std::move(embed1), std::move(embed2)};
}

/// D spanned by all coordinates of a shared coordinate system, embedded
/// identically into both spaces. Requires equal dimensions.
inline CommonDomain shared_coordinates_domain(const WeightedSpace& h1, const WeightedSpace& h2) {
  if (h1.dim != h2.dim) fail(errc::invalid, "shared-coordinate spaces must have equal dimension");
  const std::size_t n = h1.dim;
  WeightedSpace ambient = euclidean_space(n, "ambient");
  return make_common_domain(DenseMatrix::identity(n),
                            OperatorBetween{DenseMatrix::identity(n), ambient, h1},
                            OperatorBetween{DenseMatrix::identity(n), ambient, h2});
}

/// Density of D in H1, decided by numerical rank of the embedded basis.
inline bool dense_in_first(const CommonDomain& cd, double kernel_rel = tol::kernel_rel) {
  return gram_rank(cd.image1(), cd.h1().gram, kernel_rel) == cd.h1().dim;
}

/// Directions in the span of the basis whose H1 image vanishes: the
/// degenerate directions a discrete measure with partial support produces.
/// Columns are coefficient vectors (length k).
inline DenseMatrix h1_null_directions(const CommonDomain& cd, double kernel_rel = tol::kernel_rel) {
  const DenseMatrix m1 = cd.image1();
  const DenseMatrix g = mul(transpose(m1), mul(cd.h1().gram, m1));
  return null_space(g, DenseMatrix::identity(g.rows), kernel_rel);
}

/// Spanning set of D^* = { h in H2 : phi -> <phi,h>_2 is bounded against
/// |phi|_1 on D }. In the finite model, h qualifies iff it is H2-orthogonal
/// to the image of every H1-null direction of D. Returns a gram-orthonormal
/// basis (possibly empty, possibly all of H2).
inline DenseMatrix dual_domain(const CommonDomain& cd, double kernel_rel = tol::kernel_rel) {
  const DenseMatrix null_dirs = h1_null_directions(cd, kernel_rel);
  const WeightedSpace& h2 = cd.h2();
  if (null_dirs.cols == 0) {
    // every functional is bounded; D^* is the whole space
    return null_space(DenseMatrix::zero(h2.dim, h2.dim), h2.gram, kernel_rel);
  }
  const DenseMatrix w = mul(cd.image2(), null_dirs);  // offending image in H2
  // projector onto span(w), then its kernel = orthogonal complement
  const DenseMatrix gw = mul(transpose(w), mul(h2.gram, w));
  const DenseMatrix gw_pinv = pseudo_inverse_selfadjoint(gw, DenseMatrix::identity(gw.rows));
  const DenseMatrix proj = mul(w, mul(gw_pinv, mul(transpose(w), h2.gram)));
  return null_space(proj, h2.gram, kernel_rel);
}

}  // namespace opdual
