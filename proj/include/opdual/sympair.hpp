#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "opdual/factorization.hpp"
#include "opdual/matrix.hpp"
#include "opdual/space.hpp"

namespace opdual {

/// A compatible pair A : H1 -> H2, B : H2 -> H1 with <Au,v>_2 = <u,Bv>_1.
struct SymmetricPair {
  OperatorBetween a;
  OperatorBetween b;
  double compatibility_residual = 0.0;
};

inline SymmetricPair make_symmetric_pair(OperatorBetween a, OperatorBetween b,
                                         double tolerance = 1e-10) {
  if (a.domain.dim != b.codomain.dim || a.codomain.dim != b.domain.dim)
    fail(errc::invalid, "pair spaces do not match");
  const DenseMatrix lhs = mul(transpose(a.matrix), a.codomain.gram);  // A^T G2
  const DenseMatrix rhs = mul(a.domain.gram, b.matrix);               // G1 B
  const double resid = frobenius(sub(lhs, rhs)) / std::max(1.0, frobenius(lhs));
  if (resid > tolerance)
    fail(errc::pair_incompatible, "pair identity residual " + std::to_string(resid));
  return SymmetricPair{std::move(a), std::move(b), resid};
}

/// L[x;y] = [By; Ax] on the direct sum; symmetric for the block gram.
inline OperatorBetween build_l(const SymmetricPair& p, double tolerance = 1e-10) {
  const DirectSum ds{p.a.domain, p.a.codomain};
  const std::size_t n1 = ds.first.dim, n2 = ds.second.dim;
  DenseMatrix m(n1 + n2, n1 + n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) m(i, n1 + j) = p.b.matrix(i, j);
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t j = 0; j < n1; ++j) m(n1 + i, j) = p.a.matrix(i, j);
  const WeightedSpace total = ds.space();
  const DenseMatrix gl = mul(total.gram, m);
  if (symmetry_defect(gl) > tolerance * std::max(1.0, max_abs(gl)))
    fail(errc::pair_incompatible, "block operator is not symmetric");
  return OperatorBetween{std::move(m), total, total};
}

/// The defect space: eigenvectors of A*B* at eigenvalue -1, with the inner
/// product inherited from H1 and the action of BB* restricted to it.
struct DefectModel {
  std::size_t dim = 0;
  DenseMatrix gram;            // dim x dim, SPD
  DenseMatrix bb_star_action;  // dim x dim
  double assembly_residual = 0.0;  // independent assembly vs the stored action
};

struct DefectReport {
  DefectModel model;
  std::pair<std::size_t, std::size_t> indices{0, 0};
  std::vector<double> astar_bstar_eigenvalues;
};

/// For everywhere-defined pairs the compatibility identity forces B = A*, so
/// A*B* = A*A is PSD and the defect is empty: indices (0,0). The eigenvalues
/// are reported so the -1 threshold test is visible.
inline DefectReport defect_space(const SymmetricPair& p, double eig_tol = 1e-8) {
  const OperatorBetween as = adjoint(p.a);
  const OperatorBetween bs = adjoint(p.b);
  const DenseMatrix m = mul(as.matrix, bs.matrix);  // A* B* on H1
  const EigenDecomposition dec = sym_eigen(m, p.a.domain.gram, 1e-7);

  DefectReport rep;
  rep.astar_bstar_eigenvalues = dec.values;
  DenseMatrix basis(p.a.domain.dim, 0);
  for (std::size_t i = 0; i < dec.values.size(); ++i)
    if (std::abs(dec.values[i] + 1.0) <= eig_tol) basis = hstack(basis, dec.vectors.column(i));
  rep.model.dim = basis.cols;
  if (basis.cols > 0) {
    rep.model.gram = mul(transpose(basis), mul(p.a.domain.gram, basis));
    const DenseMatrix bbs = mul(p.b.matrix, bs.matrix);
    const DenseMatrix gi = spd_inverse(rep.model.gram);
    rep.model.bb_star_action =
        mul(gi, mul(transpose(basis), mul(p.a.domain.gram, mul(bbs, basis))));
  } else {
    rep.model.gram = DenseMatrix(0, 0);
    rep.model.bb_star_action = DenseMatrix(0, 0);
  }
  rep.indices = {rep.model.dim, rep.model.dim};
  return rep;
}

namespace detail {

// Composite trapezoid with one Richardson step (halved spacing), giving
// Simpson-order accuracy. f is sampled analytically, so refinement is free.
inline double trapezoid_refined(const std::function<double(double)>& f, double lo, double hi,
                                std::size_t points) {
  auto trap = [&](std::size_t m) {
    const double h = (hi - lo) / double(m - 1);
    double s = 0.5 * (f(lo) + f(hi));
    for (std::size_t i = 1; i + 1 < m; ++i) s += f(lo + double(i) * h);
    return s * h;
  };
  const double coarse = trap(points);
  const double fine = trap(2 * points - 1);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace detail

/// The interval model: the defect equation reduces to u'' = u, solved by
/// e^x and e^{-x}, both square integrable on a finite interval, so dim = 2.
/// The gram comes from quadrature; B* acts as -1 on the span (spectrally,
/// from u'' = u), and the second-difference assembly of BB* is kept as a
/// verification residual.
inline DefectModel interval_defect_model(std::size_t grid_points, double lo, double hi,
                                         double consistency_tol = 1e-4) {
  if (grid_points < 16) fail(errc::invalid, "need at least 16 grid points");
  if (!(lo < hi)) fail(errc::invalid, "empty interval");

  auto up = [](double x) { return std::exp(x); };
  auto um = [](double x) { return std::exp(-x); };
  std::vector<std::function<double(double)>> cand{up, um};

  auto gram_at = [&](std::size_t m) {
    DenseMatrix g(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = i; j < 2; ++j) {
        const double v = detail::trapezoid_refined(
            [&](double x) { return cand[i](x) * cand[j](x); }, lo, hi, m);
        g(i, j) = v;
        g(j, i) = v;
      }
    return g;
  };

  const DenseMatrix gram = gram_at(grid_points);
  const DenseMatrix refined = gram_at(2 * grid_points - 1);
  for (std::size_t i = 0; i < 4; ++i) {
    const double rel = std::abs(gram.a[i] - refined.a[i]) / std::max(std::abs(refined.a[i]), 1e-30);
    if (rel > consistency_tol)
      fail(errc::grid_too_coarse, "quadrature changed by " + std::to_string(rel) +
                                      " under refinement");
  }

  // second differences on the sampled grid, projected back onto the span
  // through interior-restricted quadrature weights
  const std::size_t m = grid_points;
  const double h = (hi - lo) / double(m - 1);
  DenseMatrix inner_gram(2, 2);
  DenseMatrix inner_cross(2, 2);  // <u_i, u_j''>
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double g = 0.0, c = 0.0;
      for (std::size_t k = 1; k + 1 < m; ++k) {
        const double x = lo + double(k) * h;
        const double second =
            (cand[j](x + h) - 2.0 * cand[j](x) + cand[j](x - h)) / (h * h);
        g += cand[i](x) * cand[j](x) * h;
        c += cand[i](x) * second * h;
      }
      inner_gram(i, j) = g;
      inner_cross(i, j) = c;
    }
  // BB* u = u'' on the span; coefficients of the projection of u'' onto it
  const DenseMatrix assembled = cholesky_solve_matrix(cholesky_spd(inner_gram), inner_cross);

  DefectModel model;
  model.dim = 2;
  model.gram = gram;
  model.bb_star_action = DenseMatrix::identity(2);
  model.assembly_residual = frobenius(sub(assembled, DenseMatrix::identity(2)));
  return model;
}

struct IntervalSweep {
  std::vector<double> radii;
  std::vector<std::vector<double>> squared_norms;  // per candidate, per radius
  std::vector<double> log_norm_slopes;             // per candidate
  std::size_t surviving_dim = 0;
  std::pair<std::size_t, std::size_t> indices{0, 0};
};

/// Growing-interval classifier: on (-R,R) the squared norms of the defect
/// candidates grow like e^{2R}/2; a positive log-norm slope excludes them at
/// infinity, so the line has an empty defect space.
inline IntervalSweep interval_sweep(const std::vector<double>& radii, std::size_t grid_points = 256,
                                    double slope_cut = 0.1) {
  if (radii.size() < 2) fail(errc::invalid, "sweep needs at least two radii");
  IntervalSweep out;
  out.radii = radii;
  out.squared_norms.assign(2, {});
  std::vector<std::function<double(double)>> cand{[](double x) { return std::exp(x); },
                                                  [](double x) { return std::exp(-x); }};
  for (double r : radii) {
    for (std::size_t i = 0; i < 2; ++i) {
      const double n2 = detail::trapezoid_refined(
          [&](double x) { return cand[i](x) * cand[i](x); }, -r, r, grid_points);
      out.squared_norms[i].push_back(n2);
    }
  }
  for (std::size_t i = 0; i < 2; ++i) {
    // least-squares slope of log |u|^2 against R
    const std::size_t n = radii.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = radii[k], y = std::log(out.squared_norms[i][k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
    out.log_norm_slopes.push_back(slope);
    if (slope <= slope_cut) ++out.surviving_dim;
  }
  out.indices = {out.surviving_dim, out.surviving_dim};
  return out;
}

/// Real 2n-dimensional representation of a complex vector; i acts as the
/// block rotation (re, im) -> (-im, re).
struct ComplexVector2 {
  std::vector<double> re, im;

  ComplexVector2 times_i() const {
    return ComplexVector2{vscale(-1.0, im), re};
  }
  ComplexVector2 times_minus_i() const {
    return ComplexVector2{im, vscale(-1.0, re)};
  }
};

inline ComplexVector2 cv_sub(const ComplexVector2& a, const ComplexVector2& b) {
  return ComplexVector2{vsub(a.re, b.re), vsub(a.im, b.im)};
}

/// phi(h) = [h; iB*h], the eigenvalue -i embedding of the defect space.
/// Coordinates are stacked as (H1-side block, H2-side block) over the defect
/// span, where B* = -1.
inline ComplexVector2 defect_to_minus(const DefectModel& model, const std::vector<double>& h) {
  std::vector<double> re(2 * model.dim, 0.0), im(2 * model.dim, 0.0);
  for (std::size_t i = 0; i < model.dim; ++i) {
    re[i] = h[i];
    im[model.dim + i] = -h[i];  // i * B* h = -i h
  }
  return ComplexVector2{std::move(re), std::move(im)};
}

/// psi(h) = [h; -iB*h], the eigenvalue +i embedding.
inline ComplexVector2 defect_to_plus(const DefectModel& model, const std::vector<double>& h) {
  std::vector<double> re(2 * model.dim, 0.0), im(2 * model.dim, 0.0);
  for (std::size_t i = 0; i < model.dim; ++i) {
    re[i] = h[i];
    im[model.dim + i] = h[i];
  }
  return ComplexVector2{std::move(re), std::move(im)};
}

namespace detail {

// L* on stacked defect coordinates: (x, y) -> (A* y, B* x) with B* = -1 and
// A* acting as the assembled BB* restriction (exactly 1 in the spectral
// model, near 1 when an assembled action is supplied).
inline ComplexVector2 lstar_apply(const DefectModel& model, const ComplexVector2& v) {
  const std::size_t k = model.dim;
  auto act = [&](const std::vector<double>& w) {
    std::vector<double> out(2 * k, 0.0);
    std::vector<double> y(w.begin() + k, w.end());
    const std::vector<double> ay = matvec(model.bb_star_action, y);
    for (std::size_t i = 0; i < k; ++i) {
      out[i] = ay[i];        // A* y
      out[k + i] = -w[i];    // B* x
    }
    return out;
  };
  return ComplexVector2{act(v.re), act(v.im)};
}

inline double stacked_norm(const DefectModel& model, const ComplexVector2& v) {
  // block gram: the defect gram on each of the four blocks
  double s = 0.0;
  const std::size_t k = model.dim;
  auto block = [&](const std::vector<double>& w, std::size_t off) {
    std::vector<double> b(w.begin() + off, w.begin() + off + k);
    return dot(b, matvec(model.gram, b));
  };
  s += block(v.re, 0) + block(v.re, k) + block(v.im, 0) + block(v.im, k);
  return std::sqrt(std::max(0.0, s));
}

}  // namespace detail

struct DeficiencyCheck {
  std::size_t image_dim = 0;
  double max_minus_residual = 0.0;
  double max_plus_residual = 0.0;
  bool injective = false;
};

/// Verifies L* phi(h) = -i phi(h) and L* psi(h) = +i psi(h) over a basis of
/// the defect space, and that both maps are injective.
inline DeficiencyCheck deficiency_isomorphisms(const DefectModel& model) {
  DeficiencyCheck out;
  out.image_dim = model.dim;
  out.injective = true;
  for (std::size_t c = 0; c < model.dim; ++c) {
    const std::vector<double> h = basis_vector(model.dim, c);
    const ComplexVector2 phi = defect_to_minus(model, h);
    const ComplexVector2 psi = defect_to_plus(model, h);
    const double nphi = detail::stacked_norm(model, phi);
    const double npsi = detail::stacked_norm(model, psi);
    if (nphi == 0.0 || npsi == 0.0) out.injective = false;

    const ComplexVector2 res_minus = cv_sub(detail::lstar_apply(model, phi), phi.times_minus_i());
    const ComplexVector2 res_plus = cv_sub(detail::lstar_apply(model, psi), psi.times_i());
    out.max_minus_residual = std::max(
        out.max_minus_residual, detail::stacked_norm(model, res_minus) / std::max(nphi, 1e-300));
    out.max_plus_residual = std::max(
        out.max_plus_residual, detail::stacked_norm(model, res_plus) / std::max(npsi, 1e-300));
  }
  return out;
}

struct QConditionReport {
  double residual = 0.0;      // gram operator norm of (I+BB*) - Q*(I+BB*)Q
  double nl1_max_diff = 0.0;  // norm-preservation on basis vectors
  bool pass = false;
};

/// Norm-preservation condition for extension parameters: Q solves
/// I + BB* = Q*(I+BB*)Q on the defect space (gram-aware adjoint).
inline QConditionReport q_condition_check(const DefectModel& model, const DenseMatrix& q,
                                          double tolerance = 1e-9) {
  if (q.rows != model.dim || q.cols != model.dim) fail(errc::invalid, "Q shape mismatch");
  QConditionReport rep;
  if (model.dim == 0) {
    rep.pass = true;
    return rep;
  }
  const DenseMatrix ipbb = add(DenseMatrix::identity(model.dim), model.bb_star_action);
  const DenseMatrix gi = spd_inverse(model.gram);
  const DenseMatrix q_star = mul(gi, mul(transpose(q), model.gram));
  const DenseMatrix x = sub(ipbb, mul(q_star, mul(ipbb, q)));
  // gram operator norm of x: largest eigenvalue of x*x for the defect gram
  const DenseMatrix xtgx = mul(transpose(x), mul(model.gram, x));
  const EigenDecomposition dec = sym_eigen(mul(gi, xtgx), model.gram, 1e-6);
  rep.residual = std::sqrt(std::max(0.0, dec.values.empty() ? 0.0 : dec.values.back()));

  for (std::size_t c = 0; c < model.dim; ++c) {
    const std::vector<double> u = basis_vector(model.dim, c);
    const std::vector<double> qu = matvec(q, u);
    auto energy = [&](const std::vector<double>& w) {
      // |w|^2 + |B* w|^2 with |B* w|_2^2 = <w, BB* w>_1
      return dot(w, matvec(model.gram, w)) +
             dot(w, matvec(model.gram, matvec(model.bb_star_action, w)));
    };
    rep.nl1_max_diff = std::max(rep.nl1_max_diff, std::abs(energy(u) - energy(qu)));
  }
  rep.pass = rep.residual <= tolerance;
  return rep;
}

/// One element of the extension domain: a pair-space part (x,y) and defect
/// coefficients u, v with v = Qu.
struct ExtensionElement {
  std::vector<double> x, y;  // may be empty when no concrete pair is attached
  std::vector<double> u, v;
};

struct ExtensionVector {
  // pair-space blocks
  std::vector<double> h1_re, h2_re;
  // defect blocks (first and second component, real and imaginary parts)
  std::vector<double> d1_re, d1_im, d2_re, d2_im;
  double boundary_form = 0.0;       // Im <f, L_Q f> over the element
  double defect_norm_balance = 0.0; // |psi_+|^2 - |psi_-|^2, equal to the boundary form
};

/// Action of the selfadjoint extension attached to Q:
/// [x;y] + psi_+ + psi_- maps to [By + iu - iv; Ax + B*u + B*v], the
/// restriction of L* to the von Neumann domain. The defect block is treated
/// as orthogonal to the sampled pair block.
inline ExtensionVector extension_action(const SymmetricPair* pair, const DefectModel& model,
                                        const DenseMatrix& q, const ExtensionElement& el,
                                        double tolerance = 1e-9) {
  if (!q_condition_check(model, q, tolerance).pass)
    fail(errc::q_not_admissible, "Q fails the norm-preservation condition");
  if (el.u.size() != model.dim || el.v.size() != model.dim)
    fail(errc::invalid, "defect coefficient size mismatch");
  const std::vector<double> qu = matvec(q, el.u);
  double unorm = 0.0;
  if (model.dim > 0) unorm = std::sqrt(dot(el.u, matvec(model.gram, el.u)));
  const std::vector<double> dv = vsub(el.v, qu);
  double mismatch = 0.0;
  if (model.dim > 0) mismatch = std::sqrt(dot(dv, matvec(model.gram, dv)));
  if (mismatch > tolerance * std::max(1.0, unorm))
    fail(errc::decomposition_mismatch, "v != Qu");

  ExtensionVector out;
  if (pair) {
    if (el.x.size() != pair->a.domain.dim || el.y.size() != pair->a.codomain.dim)
      fail(errc::invalid, "pair coordinate size mismatch");
    out.h1_re = matvec(pair->b.matrix, el.y);  // B y
    out.h2_re = matvec(pair->a.matrix, el.x);  // A x
  } else if (!el.x.empty() || !el.y.empty()) {
    fail(errc::invalid, "pair coordinates supplied without a pair");
  }

  out.d1_im = vsub(el.u, el.v);                       // i(u - v)
  out.d2_re = vscale(-1.0, axpy(1.0, el.u, el.v));    // B*(u+v) = -(u+v)
  out.d1_re.assign(model.dim, 0.0);
  out.d2_im.assign(model.dim, 0.0);

  if (model.dim > 0) {
    const double uu = dot(el.u, matvec(model.gram, el.u));
    const double vv = dot(el.v, matvec(model.gram, el.v));
    out.defect_norm_balance = 2.0 * (uu - vv);
    // Im<f, L_Q f>: only the defect blocks contribute; pair blocks are real
    const std::vector<double> sum_uv = axpy(1.0, el.u, el.v);
    const std::vector<double> diff_uv = vsub(el.u, el.v);
    const double c1 = dot(sum_uv, matvec(model.gram, out.d1_im));
    const double c2 = -dot(diff_uv, matvec(model.gram, out.d2_re));
    out.boundary_form = c1 + c2;
  }
  return out;
}

struct CBlockReport {
  double residual = 0.0;
  bool c12_pseudo_inverted = false;
};

/// Diagnostic for the compatibility relation between a 2x2 extension block
/// matrix C and the induced Q: C22 C12^{-1} (C11 - Q) + C12^{-1} (C11 - Q) Q = C21.
inline CBlockReport c_block_relation_check(const DefectModel& model, const DenseMatrix& q,
                                           const DenseMatrix& c11, const DenseMatrix& c12,
                                           const DenseMatrix& c21, const DenseMatrix& c22,
                                           bool strict = false) {
  const std::size_t k = model.dim;
  for (const DenseMatrix* m : {&c11, &c12, &c21, &c22, &q})
    if (m->rows != k || m->cols != k) fail(errc::invalid, "block shape mismatch");
  CBlockReport rep;
  if (k == 0) return rep;
  const DenseMatrix c12_pinv = pseudo_inverse(c12, &rep.c12_pseudo_inverted);
  if (strict && rep.c12_pseudo_inverted) fail(errc::singular_c12, "C12 is singular");
  const DenseMatrix gap = sub(c11, q);
  const DenseMatrix lhs =
      add(mul(c22, mul(c12_pinv, gap)), mul(c12_pinv, mul(gap, q)));
  rep.residual = frobenius(sub(lhs, c21));
  return rep;
}

}  // namespace opdual
