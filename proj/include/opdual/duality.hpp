#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "opdual/charproj.hpp"
#include "opdual/factorization.hpp"
#include "opdual/matrix.hpp"
#include "opdual/space.hpp"

namespace opdual {

/// A measure on finitely many labelled points. L^2 coordinates exist only on
/// the support, which is how mutually singular pairs enter the finite model.
struct DiscreteMeasureSpace {
  std::vector<std::string> points;
  std::vector<double> weights;
  std::vector<std::size_t> support;

  WeightedSpace l2(const std::string& label = "L2(mu)") const {
    std::vector<double> w;
    for (std::size_t i : support) w.push_back(weights[i]);
    return make_weighted_space(DenseMatrix::diagonal(w), label);
  }

  /// support coordinates <- ambient coordinates
  DenseMatrix restriction() const {
    DenseMatrix r(support.size(), points.size());
    for (std::size_t i = 0; i < support.size(); ++i) r(i, support[i]) = 1.0;
    return r;
  }
};

inline DiscreteMeasureSpace make_discrete_measure(std::vector<std::string> points,
                                                  std::vector<double> weights) {
  if (points.size() != weights.size()) fail(errc::invalid, "points/weights length mismatch");
  DiscreteMeasureSpace m{std::move(points), std::move(weights), {}};
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    if (!(m.weights[i] >= 0.0) || !std::isfinite(m.weights[i]))
      fail(errc::invalid, "weights must be finite and nonnegative");
    if (m.weights[i] > 0.0) m.support.push_back(i);
  }
  return m;
}

/// D = all functions on the common point set, embedded into both L^2 spaces
/// by restriction to the respective supports.
inline CommonDomain measure_pair_domain(const DiscreteMeasureSpace& mu1,
                                        const DiscreteMeasureSpace& mu2) {
  if (mu1.points != mu2.points) fail(errc::invalid, "measures live on different point sets");
  const std::size_t n = mu1.points.size();
  WeightedSpace ambient = euclidean_space(n, "ambient");
  return make_common_domain(DenseMatrix::identity(n),
                            OperatorBetween{mu1.restriction(), ambient, mu1.l2("L2(mu1)")},
                            OperatorBetween{mu2.restriction(), ambient, mu2.l2("L2(mu2)")});
}

struct DualityResult {
  OperatorBetween delta;  // on H1
  DenseMatrix j;          // inclusion matrix, H2-coords x H1-coords
  double t3_residual = 0.0;
};

/// Delta = J*J for the coordinate inclusion J of the common domain, after
/// verifying density of D in H1 and well-definedness of J. The identity
/// <phi, Delta phi>_1 = |phi|_2^2 on D is checked in polarized (matrix) form.
inline DualityResult duality_operator(const CommonDomain& cd, double leak_tol = 1e-9,
                                      double t3_tol = 1e-10) {
  if (!dense_in_first(cd)) fail(errc::not_dense, "common domain not dense in H1");

  const DenseMatrix m1 = cd.image1();
  const DenseMatrix m2 = cd.image2();

  // directions that vanish in H1 must also vanish in H2, or the inclusion
  // does not define an operator (the mutually-singular phenomenon)
  const DenseMatrix null_dirs = h1_null_directions(cd);
  double m2_scale = 1.0;
  for (std::size_t j = 0; j < m2.cols; ++j)
    m2_scale = std::max(m2_scale, norm(cd.h2(), m2.column_vec(j)));
  for (std::size_t j = 0; j < null_dirs.cols; ++j) {
    const double leak = norm(cd.h2(), matvec(m2, null_dirs.column_vec(j)));
    if (leak > leak_tol * m2_scale)
      fail(errc::inclusion_ill_defined,
           "a direction with vanishing H1 norm has nonzero H2 norm");
  }

  // J phi = the H2 coordinates of any ambient representative of phi; the
  // least-squares preimage is as good as any once leakage is excluded.
  const DenseMatrix m1m1t = mul(m1, transpose(m1));
  const DenseMatrix m1_pinv = mul(transpose(m1), spd_inverse(m1m1t));
  const DenseMatrix j = mul(m2, m1_pinv);

  const OperatorBetween jop{j, cd.h1(), cd.h2()};
  const OperatorBetween delta = compose(adjoint(jop), jop);

  // polarized identity on D: M1^T G1 Delta M1 = M2^T G2 M2
  const DenseMatrix lhs = mul(transpose(m1), mul(cd.h1().gram, mul(delta.matrix, m1)));
  const DenseMatrix rhs = mul(transpose(m2), mul(cd.h2().gram, m2));
  const double resid = frobenius(sub(lhs, rhs)) / std::max(1.0, frobenius(rhs));
  if (resid > 100 * t3_tol)
    fail(errc::inclusion_ill_defined, "duality identity failed on the common domain");
  return DualityResult{delta, j, resid};
}

struct SpectralAtom {
  double lambda = 0.0;
  double mass = 0.0;
};

/// Finite atomic measure on the spectrum: mass of each eigenvalue is the
/// squared norm of the spectral projection of phi.
struct SpectralMeasure {
  std::vector<SpectralAtom> atoms;

  double total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
  }
  double first_moment() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.lambda * a.mass;
    return s;
  }
};

/// Atoms (lambda_i, |P_i phi|_1^2) of a PSD gram-selfadjoint operator.
/// Total mass |phi|_1^2; first moment <phi, Delta phi>_1.
inline SpectralMeasure spectral_measure(const OperatorBetween& delta,
                                        const std::vector<double>& phi) {
  const EigenDecomposition dec = sym_eigen(delta.matrix, delta.domain.gram);
  const double scale = std::max(dec.max_abs_value(), 1.0);
  const double merge = 1e-9 * scale;
  const double phi_scale = inner(delta.domain, phi, phi);

  SpectralMeasure mu;
  std::size_t i = 0;
  while (i < dec.values.size()) {
    double lambda = dec.values[i];
    double mass = 0.0;
    std::size_t j = i;
    while (j < dec.values.size() && std::abs(dec.values[j] - lambda) <= merge) {
      const double c = inner(delta.domain, dec.vectors.column_vec(j), phi);
      mass += c * c;
      ++j;
    }
    if (lambda < 0.0) {
      if (lambda < -1e-9 * scale) fail(errc::invalid, "spectral measure of a non-PSD operator");
      lambda = 0.0;
    }
    if (mass > 1e-14 * std::max(1.0, phi_scale)) mu.atoms.push_back({lambda, mass});
    i = j;
  }
  return mu;
}

struct PartialIsometry {
  OperatorBetween k;  // H1 -> H2
  double projection_residual = 0.0;  // |K*K - P_ran| for the range projection
  double m1_residual = 0.0;          // <K phi, Delta2 K phi>_2 vs |phi|_2^2 on D
};

/// K = J Delta^{-1/2} on ran(Delta^{1/2}), zero on the complement. K*K is the
/// projection onto that range, and <K phi, JJ* K phi>_2 recovers |phi|_2^2.
inline PartialIsometry partial_isometry_k(const CommonDomain& cd) {
  const DualityResult dr = duality_operator(cd);
  const DenseMatrix& g1 = cd.h1().gram;
  const DenseMatrix inv_sqrt = pinv_sqrt_psd(dr.delta.matrix, g1);
  const OperatorBetween jop{dr.j, cd.h1(), cd.h2()};
  const OperatorBetween k{mul(dr.j, inv_sqrt), cd.h1(), cd.h2()};

  PartialIsometry out{k};
  const EigenDecomposition dec = sym_eigen(dr.delta.matrix, g1);
  const double thr = tol::kernel_rel * std::max(dec.max_abs_value(), 0.0);
  const DenseMatrix range_proj = spectral_function(
      dr.delta.matrix, g1, [thr](double x) { return x > thr ? 1.0 : 0.0; });
  const DenseMatrix kstark = mul(adjoint(k).matrix, k.matrix);
  out.projection_residual = frobenius(sub(kstark, range_proj));

  const OperatorBetween delta2 = compose(jop, adjoint(jop));
  const DenseMatrix m1 = cd.image1();
  const DenseMatrix m2 = cd.image2();
  for (std::size_t c = 0; c < m1.cols; ++c) {
    const std::vector<double> phi1 = m1.column_vec(c);
    const std::vector<double> phi2 = m2.column_vec(c);
    const std::vector<double> kphi = matvec(k, phi1);
    const double lhs = inner(cd.h2(), kphi, matvec(delta2, kphi));
    const double rhs = inner(cd.h2(), phi2, phi2);
    out.m1_residual =
        std::max(out.m1_residual, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return out;
}

struct ReflectionResult {
  OperatorBetween u_hat;  // on H2
  double defining_residual = 0.0;   // <U^ phi, psi>_2 vs <Delta U phi, psi>_1 on D x D
  double selfadjoint_residual = 0.0;
  double norm_bound = 0.0;  // operator norm on H2
};

/// The contractive selfadjoint reflection on H2 induced by a unitary U on H1
/// that intertwines Delta U = U^{-1} Delta. Defined on the closure of D in
/// H2 by <U^ phi, psi>_2 = <Delta U phi, psi>_1, zero on ker(J*).
inline ReflectionResult reflection_hat(const CommonDomain& cd, const OperatorBetween& u,
                                       double unitary_tol = 1e-10,
                                       double intertwine_tol = 1e-10,
                                       double contraction_slack = 1e-10) {
  if (u.matrix.rows != cd.h1().dim || u.matrix.cols != cd.h1().dim)
    fail(errc::invalid, "U must act on H1");
  const DenseMatrix uu = mul(adjoint(u).matrix, u.matrix);
  const double unit_resid = frobenius(sub(uu, DenseMatrix::identity(uu.rows)));
  if (unit_resid > unitary_tol * std::sqrt(double(uu.rows)))
    fail(errc::not_unitary, "U*U != I, residual " + std::to_string(unit_resid));

  const DualityResult dr = duality_operator(cd);
  const double dscale = std::max(frobenius(dr.delta.matrix), 1e-300);
  const DenseMatrix dn = scaled(dr.delta.matrix, 1.0 / dscale);
  const DenseMatrix uinv = adjoint(u).matrix;  // = U^{-1} for unitary U
  const double twist = frobenius(sub(mul(dn, u.matrix), mul(uinv, dn)));
  if (twist > intertwine_tol * double(dn.rows))
    fail(errc::not_intertwining, "Delta U != U^{-1} Delta, residual " + std::to_string(twist));

  const DenseMatrix m1 = cd.image1();
  const DenseMatrix w = cd.image2();
  const DenseMatrix& g2 = cd.h2().gram;
  const DenseMatrix phi_gram = mul(transpose(w), mul(g2, w));
  const DenseMatrix phi_pinv = pseudo_inverse_selfadjoint(phi_gram, DenseMatrix::identity(phi_gram.rows));
  const DenseMatrix r = mul(transpose(m1), mul(cd.h1().gram, mul(dr.delta.matrix, mul(u.matrix, m1))));
  const DenseMatrix s = mul(phi_pinv, r);
  const DenseMatrix u_hat = mul(w, mul(s, mul(phi_pinv, mul(transpose(w), g2))));

  ReflectionResult out{OperatorBetween{u_hat, cd.h2(), cd.h2()}};
  const DenseMatrix lhs = mul(transpose(w), mul(g2, mul(u_hat, w)));
  out.defining_residual = frobenius(sub(lhs, r)) / std::max(1.0, frobenius(r));
  const DenseMatrix g2uh = mul(g2, u_hat);
  out.selfadjoint_residual = symmetry_defect(g2uh) / std::max(1.0, max_abs(g2uh));
  out.norm_bound = operator_norm(out.u_hat);
  if (out.norm_bound > 1.0 + contraction_slack)
    fail(errc::invalid, "reflection exceeded the contraction bound");
  return out;
}

/// A closed semibounded form q on its space: q(u,v) = u^T form_matrix v with
/// q(phi,phi) >= |phi|^2.
struct SemiboundedForm {
  WeightedSpace space;
  DenseMatrix form_matrix;
};

inline SemiboundedForm make_semibounded_form(WeightedSpace space, DenseMatrix form_matrix,
                                             double psd_tol = 1e-10) {
  if (form_matrix.rows != space.dim || form_matrix.cols != space.dim)
    fail(errc::invalid, "form shape mismatch");
  const double scale = std::max(1.0, max_abs(form_matrix));
  if (symmetry_defect(form_matrix) > 1e-10 * scale)
    fail(errc::invalid, "form matrix not symmetric");
  const DenseMatrix excess = sub(form_matrix, space.gram);
  const EigenDecomposition dec = sym_eigen(excess, DenseMatrix::identity(excess.rows));
  if (!dec.values.empty() && dec.values.front() < -psd_tol * scale)
    fail(errc::not_semibounded, "form is below the norm squared");
  return SemiboundedForm{std::move(space), std::move(form_matrix)};
}

/// An operator A >= 1 on a (possibly proper) domain inside its space;
/// domain columns span D in the space coordinates.
struct DomainOperator {
  WeightedSpace space;
  DenseMatrix matrix;  // acts on space coordinates
  DenseMatrix domain;  // space.dim x k, full column rank
};

inline DomainOperator make_domain_operator(WeightedSpace space, DenseMatrix matrix,
                                           DenseMatrix domain) {
  if (matrix.rows != space.dim || matrix.cols != space.dim)
    fail(errc::invalid, "operator shape mismatch");
  if (domain.rows != space.dim || domain.cols == 0) fail(errc::invalid, "bad domain basis");
  if (gram_rank(domain, space.gram) != domain.cols)
    fail(errc::invalid, "domain basis is rank deficient");
  return DomainOperator{std::move(space), std::move(matrix), std::move(domain)};
}

inline DomainOperator full_domain_operator(WeightedSpace space, DenseMatrix matrix) {
  const std::size_t n = space.dim;
  return make_domain_operator(std::move(space), std::move(matrix), DenseMatrix::identity(n));
}

struct FriedrichsResult {
  OperatorBetween extension;  // (JJ*)^{-1}, pseudo-inverted when D is proper
  OperatorBetween jj_star;
  WeightedSpace form_space;       // H_A, gram <phi, A psi>
  double pointwise_agreement = 0.0;  // |ext(A phi) route|: ext phi vs A phi on D
  double form_agreement = 0.0;       // <psi, ext phi> vs q(psi,phi) on D x D
  double contraction_norm = 0.0;     // |JJ*|
  bool pseudo_inverted = false;
  std::size_t complement_dim = 0;
};

/// Friedrichs extension through the energy-space inclusion: build H_A with
/// gram <phi, A psi>, the inclusion J : H_A -> H, and invert JJ*. With a
/// proper domain the kernel of JJ* is D-perp and the thresholded
/// pseudo-inverse is used (reported); the extension then agrees with A on D
/// in the form sense.
inline FriedrichsResult friedrichs_extension(const DomainOperator& a, double psd_tol = 1e-10) {
  const std::size_t n = a.space.dim;
  const std::size_t k = a.domain.cols;
  const DenseMatrix ad = mul(a.matrix, a.domain);
  DenseMatrix ga = mul(transpose(a.domain), mul(a.space.gram, ad));  // k x k
  const double scale = std::max(1.0, max_abs(ga));
  if (symmetry_defect(ga) > 1e-9 * scale)
    fail(errc::not_selfadjoint, "A is not symmetric on its domain");
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double m = 0.5 * (ga(i, j) + ga(j, i));
      ga(i, j) = m;
      ga(j, i) = m;
    }
  const DenseMatrix dd = mul(transpose(a.domain), mul(a.space.gram, a.domain));
  const EigenDecomposition excess = sym_eigen(sub(ga, dd), DenseMatrix::identity(k));
  if (!excess.values.empty() && excess.values.front() < -psd_tol * scale)
    fail(errc::not_semibounded, "A is not >= 1 on its domain");

  FriedrichsResult out;
  out.form_space = make_weighted_space(ga, "H_A");
  const OperatorBetween j{a.domain, out.form_space, a.space};
  out.jj_star = compose(j, adjoint(j));
  out.contraction_norm = operator_norm(out.jj_star);

  DenseMatrix ext;
  if (k == n) {
    const DenseMatrix gjj = mul(a.space.gram, out.jj_star.matrix);
    ext = cholesky_solve_matrix(cholesky_spd(gjj), a.space.gram);
  } else {
    out.pseudo_inverted = true;
    out.complement_dim = n - k;
    ext = pseudo_inverse_selfadjoint(out.jj_star.matrix, a.space.gram);
  }
  out.extension = OperatorBetween{ext, a.space, a.space};

  const DenseMatrix extd = mul(ext, a.domain);
  out.pointwise_agreement = frobenius(sub(extd, ad)) / std::max(1.0, frobenius(ad));
  const DenseMatrix form_lhs = mul(transpose(a.domain), mul(a.space.gram, extd));
  out.form_agreement = frobenius(sub(form_lhs, ga)) / std::max(1.0, frobenius(ga));
  return out;
}

inline FriedrichsResult friedrichs_extension(const SemiboundedForm& q) {
  const DenseMatrix l = cholesky_spd(q.space.gram);
  DenseMatrix a = cholesky_solve_matrix(l, q.form_matrix);  // A = G^{-1} q
  return friedrichs_extension(full_domain_operator(q.space, std::move(a)));
}

struct KreinReport {
  bool member = false;
  bool selfadjoint_ok = false, contraction_ok = false, action_ok = false;
  double selfadjoint_residual = 0.0;
  double norm = 0.0;
  double action_residual = 0.0;
  std::string reason;
};

/// Membership of B in the Krein set of A: B selfadjoint, contractive, and a
/// left inverse of A on the domain of A.
inline KreinReport krein_membership(const DomainOperator& a, const OperatorBetween& b,
                                    double tolerance = 1e-9) {
  KreinReport rep;
  const DenseMatrix gb = mul(a.space.gram, b.matrix);
  rep.selfadjoint_residual = symmetry_defect(gb) / std::max(1.0, max_abs(gb));
  rep.selfadjoint_ok = rep.selfadjoint_residual <= tolerance;

  rep.norm = operator_norm(b);
  rep.contraction_ok = rep.norm <= 1.0 + tolerance;

  for (std::size_t c = 0; c < a.domain.cols; ++c) {
    const std::vector<double> phi = a.domain.column_vec(c);
    const std::vector<double> back = matvec(b.matrix, matvec(a.matrix, phi));
    rep.action_residual = std::max(
        rep.action_residual, norm(a.space, vsub(back, phi)) / std::max(1.0, norm(a.space, phi)));
  }
  rep.action_ok = rep.action_residual <= tolerance;

  rep.member = rep.selfadjoint_ok && rep.contraction_ok && rep.action_ok;
  if (!rep.selfadjoint_ok)
    rep.reason = "not selfadjoint";
  else if (!rep.contraction_ok)
    rep.reason = "norm exceeds one";
  else if (!rep.action_ok)
    rep.reason = "does not invert A on its domain";
  return rep;
}

/// q(phi,psi) = <A^{1/2} phi, A^{1/2} psi> for a selfadjoint A >= 1.
inline SemiboundedForm form_of(const OperatorBetween& a, double psd_tol = 1e-10) {
  const EigenDecomposition dec = sym_eigen(a.matrix, a.domain.gram);
  if (!dec.values.empty() && dec.values.front() < 1.0 - psd_tol)
    fail(errc::not_semibounded, "operator is not >= 1");
  const DenseMatrix root = sqrt_psd(a.matrix, a.domain.gram);
  DenseMatrix q = mul(transpose(root), mul(a.domain.gram, root));
  for (std::size_t i = 0; i < q.rows; ++i)
    for (std::size_t j = i + 1; j < q.cols; ++j) {
      const double m = 0.5 * (q(i, j) + q(j, i));
      q(i, j) = m;
      q(j, i) = m;
    }
  return make_semibounded_form(a.domain, std::move(q));
}

/// The operator a closed semibounded form represents, recovered through the
/// Friedrichs construction. Round-trips with form_of.
inline OperatorBetween operator_of_form(const SemiboundedForm& q) {
  return friedrichs_extension(q).extension;
}

struct DensityReport {
  std::size_t rank = 0;
  std::size_t dim = 0;
  bool dense = false;
};

/// Essential selfadjointness surrogate: A D dense in H iff rank(A D) = dim H.
inline DensityReport essential_selfadjointness_probe(const DomainOperator& a) {
  DensityReport rep;
  rep.dim = a.space.dim;
  rep.rank = gram_rank(mul(a.matrix, a.domain), a.space.gram);
  rep.dense = rep.rank == rep.dim;
  return rep;
}

}  // namespace opdual
