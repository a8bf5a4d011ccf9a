#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "opdual/duality.hpp"
#include "test_support.hpp"

using namespace opdual;
using testsup::error_code_of;

namespace {

CommonDomain random_shared_domain(std::mt19937& rng, std::size_t dim, std::size_t extra = 2) {
  const WeightedSpace h1 = testsup::random_space(rng, dim, "H1");
  const WeightedSpace h2 = testsup::random_space(rng, dim, "H2");
  const WeightedSpace ambient = euclidean_space(dim, "ambient");
  const DenseMatrix basis = testsup::random_matrix(rng, dim, dim + extra);
  return make_common_domain(basis, OperatorBetween{DenseMatrix::identity(dim), ambient, h1},
                            OperatorBetween{DenseMatrix::identity(dim), ambient, h2});
}

// gram-selfadjoint PSD operator for spectral tests
OperatorBetween random_psd_operator(std::mt19937& rng, std::size_t n) {
  const WeightedSpace h = testsup::random_space(rng, n, "H");
  const DenseMatrix b = testsup::random_matrix(rng, n, n);
  const DenseMatrix s = mul(transpose(b), b);
  return OperatorBetween{cholesky_solve_matrix(cholesky_spd(h.gram), s), h, h};
}

}  // namespace

TEST_CASE("duality operator: equal spaces give the identity") {
  std::mt19937 rng(61);
  const WeightedSpace h = testsup::random_space(rng, 4, "H");
  const CommonDomain cd = shared_coordinates_domain(h, h);
  const DualityResult dr = duality_operator(cd);
  REQUIRE(frobenius(sub(dr.delta.matrix, DenseMatrix::identity(4))) <= 1e-11);
  REQUIRE(dr.t3_residual <= 1e-12);
}

TEST_CASE("duality operator: discrete pair multiplies by the density ratio") {
  const CommonDomain cd = measure_pair_domain(make_discrete_measure({"a", "b"}, {1, 1}),
                                              make_discrete_measure({"a", "b"}, {2, 3}));
  const DualityResult dr = duality_operator(cd);
  REQUIRE(dr.delta.matrix(0, 0) == Catch::Approx(2.0).margin(1e-13));
  REQUIRE(dr.delta.matrix(1, 1) == Catch::Approx(3.0).margin(1e-13));
  REQUIRE(std::abs(dr.delta.matrix(0, 1)) < 1e-13);
}

TEST_CASE("duality operator: mutually singular supports are rejected") {
  const CommonDomain cd = measure_pair_domain(make_discrete_measure({"a", "b"}, {1, 0}),
                                              make_discrete_measure({"a", "b"}, {0, 1}));
  REQUIRE(error_code_of([&] { duality_operator(cd); }) == errc::inclusion_ill_defined);
}

TEST_CASE("duality operator: rank-deficient common domain is not dense") {
  std::mt19937 rng(67);
  const WeightedSpace h1 = testsup::random_space(rng, 3, "H1");
  const WeightedSpace h2 = testsup::random_space(rng, 3, "H2");
  const WeightedSpace ambient = euclidean_space(3, "ambient");
  DenseMatrix basis(3, 1);
  basis(0, 0) = 1.0;
  const CommonDomain cd =
      make_common_domain(basis, OperatorBetween{DenseMatrix::identity(3), ambient, h1},
                         OperatorBetween{DenseMatrix::identity(3), ambient, h2});
  REQUIRE(error_code_of([&] { duality_operator(cd); }) == errc::not_dense);
}

TEST_CASE("duality identity over random common domains") {
  std::mt19937 rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng() % 12;
    const DualityResult dr = duality_operator(random_shared_domain(rng, dim));
    REQUIRE(dr.t3_residual <= 1e-10);
    // Delta is selfadjoint and PSD for the H1 gram
    const EigenDecomposition dec =
        sym_eigen(dr.delta.matrix, dr.delta.domain.gram, 1e-7);
    REQUIRE(dec.values.front() >= -1e-9 * std::max(1.0, dec.max_abs_value()));
  }
}

TEST_CASE("discrete dichotomy: density of the dual domain tracks support containment") {
  std::mt19937 rng(73);
  std::uniform_int_distribution<int> nz(0, 2);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  int dense_seen = 0, singular_seen = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 4;
    std::vector<std::string> pts;
    std::vector<double> w1, w2;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back("p" + std::to_string(i));
      w1.push_back(nz(rng) == 0 ? 0.0 : w(rng));
      w2.push_back(nz(rng) == 0 ? 0.0 : w(rng));
    }
    if (std::count(w1.begin(), w1.end(), 0.0) == long(n)) w1[0] = 1.0;
    if (std::count(w2.begin(), w2.end(), 0.0) == long(n)) w2[1 % n] = 1.0;
    const DiscreteMeasureSpace mu1 = make_discrete_measure(pts, w1);
    const DiscreteMeasureSpace mu2 = make_discrete_measure(pts, w2);
    const CommonDomain cd = measure_pair_domain(mu1, mu2);

    const std::set<std::size_t> s1(mu1.support.begin(), mu1.support.end());
    bool contained = true;
    for (std::size_t i : mu2.support) contained = contained && s1.count(i) > 0;

    const bool dual_dense = dual_domain(cd).cols == cd.h2().dim;
    REQUIRE(dual_dense == contained);

    if (contained) {
      ++dense_seen;
      const DualityResult dr = duality_operator(cd);
      // Delta = multiplication by the density ratio on the support of mu1
      for (std::size_t i = 0; i < mu1.support.size(); ++i)
        for (std::size_t j = 0; j < mu1.support.size(); ++j) {
          const double expected =
              i == j ? mu2.weights[mu1.support[i]] / mu1.weights[mu1.support[i]] : 0.0;
          REQUIRE(dr.delta.matrix(i, j) == Catch::Approx(expected).margin(1e-11));
        }
    } else {
      ++singular_seen;
      REQUIRE(error_code_of([&] { duality_operator(cd); }) == errc::inclusion_ill_defined);
    }
  }
  REQUIRE(dense_seen > 5);
  REQUIRE(singular_seen > 5);
}

TEST_CASE("spectral measure: eigenvector input is a single atom") {
  const WeightedSpace h = euclidean_space(2);
  const OperatorBetween delta{DenseMatrix::diagonal({2, 3}), h, h};
  const SpectralMeasure mu = spectral_measure(delta, {1, 0});
  REQUIRE(mu.atoms.size() == 1);
  REQUIRE(mu.atoms[0].lambda == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(mu.atoms[0].mass == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(mu.first_moment() == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("spectral measure: the two-point Laplacian splits evenly") {
  const WeightedSpace h = euclidean_space(2);
  const OperatorBetween delta{DenseMatrix(2, 2, {1, -1, -1, 1}), h, h};
  const SpectralMeasure mu = spectral_measure(delta, {1, 0});
  REQUIRE(mu.atoms.size() == 2);
  REQUIRE(mu.atoms[0].lambda == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(mu.atoms[0].mass == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(mu.atoms[1].lambda == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(mu.atoms[1].mass == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(mu.total_mass() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(mu.first_moment() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("spectral measure: the zero vector carries no mass") {
  const WeightedSpace h = euclidean_space(2);
  const OperatorBetween delta{DenseMatrix::diagonal({2, 3}), h, h};
  REQUIRE(spectral_measure(delta, {0, 0}).atoms.empty());
}

TEST_CASE("spectral measure moments over random PSD operators") {
  std::mt19937 rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const OperatorBetween delta = random_psd_operator(rng, n);
    const std::vector<double> phi = testsup::random_vector(rng, n);
    const SpectralMeasure mu = spectral_measure(delta, phi);
    const double mass = inner(delta.domain, phi, phi);
    const double moment = inner(delta.domain, phi, matvec(delta, phi));
    REQUIRE(mu.total_mass() == Catch::Approx(mass).epsilon(1e-9).margin(1e-11));
    REQUIRE(mu.first_moment() == Catch::Approx(moment).epsilon(1e-9).margin(1e-9));
  }
}

TEST_CASE("partial isometry: equal spaces give the identity") {
  std::mt19937 rng(83);
  const WeightedSpace h = testsup::random_space(rng, 3, "H");
  const PartialIsometry pi = partial_isometry_k(shared_coordinates_domain(h, h));
  REQUIRE(frobenius(sub(pi.k.matrix, DenseMatrix::identity(3))) <= 1e-10);
}

TEST_CASE("partial isometry: discrete pair scales coordinates") {
  const CommonDomain cd = measure_pair_domain(make_discrete_measure({"a", "b"}, {1, 1}),
                                              make_discrete_measure({"a", "b"}, {2, 3}));
  const PartialIsometry pi = partial_isometry_k(cd);
  REQUIRE(pi.k.matrix(0, 0) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
  REQUIRE(pi.k.matrix(1, 1) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-12));
  const DenseMatrix kk = mul(adjoint(pi.k).matrix, pi.k.matrix);
  REQUIRE(frobenius(sub(kk, DenseMatrix::identity(2))) <= 1e-12);
}

TEST_CASE("partial isometry: range projection and the norm identity") {
  std::mt19937 rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    const PartialIsometry pi = partial_isometry_k(random_shared_domain(rng, 6));
    REQUIRE(pi.projection_residual <= 1e-10);
    REQUIRE(pi.m1_residual <= 1e-9);
    const DenseMatrix kk = mul(adjoint(pi.k).matrix, pi.k.matrix);
    REQUIRE(frobenius(sub(mul(kk, kk), kk)) <= 1e-10);
  }
}

TEST_CASE("reflection: the identity passes through") {
  std::mt19937 rng(97);
  const CommonDomain cd = random_shared_domain(rng, 4, 0);
  const OperatorBetween u{DenseMatrix::identity(4), cd.h1(), cd.h1()};
  const ReflectionResult rr = reflection_hat(cd, u);
  REQUIRE(frobenius(sub(rr.u_hat.matrix, DenseMatrix::identity(4))) <= 1e-9);
  REQUIRE(rr.selfadjoint_residual <= 1e-10);
  REQUIRE(rr.norm_bound <= 1.0 + 1e-10);

  const OperatorBetween minus{scaled(DenseMatrix::identity(4), -1.0), cd.h1(), cd.h1()};
  const ReflectionResult rm = reflection_hat(cd, minus);
  REQUIRE(frobenius(add(rm.u_hat.matrix, DenseMatrix::identity(4))) <= 1e-9);
}

TEST_CASE("reflection: a swap against the uniform pair") {
  const CommonDomain cd = measure_pair_domain(make_discrete_measure({"a", "b"}, {1, 1}),
                                              make_discrete_measure({"a", "b"}, {2, 2}));
  const OperatorBetween swap{DenseMatrix(2, 2, {0, 1, 1, 0}), cd.h1(), cd.h1()};
  const ReflectionResult rr = reflection_hat(cd, swap);
  REQUIRE(rr.u_hat.matrix(0, 1) == Catch::Approx(1.0).margin(1e-11));
  REQUIRE(rr.u_hat.matrix(1, 0) == Catch::Approx(1.0).margin(1e-11));
  REQUIRE(std::abs(rr.u_hat.matrix(0, 0)) < 1e-11);
  REQUIRE(rr.norm_bound == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(rr.selfadjoint_residual <= 1e-10);
}

TEST_CASE("reflection: non-unitary and non-intertwining inputs are rejected") {
  const CommonDomain cd = measure_pair_domain(make_discrete_measure({"a", "b"}, {1, 1}),
                                              make_discrete_measure({"a", "b"}, {2, 3}));
  const OperatorBetween stretch{scaled(DenseMatrix::identity(2), 2.0), cd.h1(), cd.h1()};
  REQUIRE(error_code_of([&] { reflection_hat(cd, stretch); }) == errc::not_unitary);

  const OperatorBetween swap{DenseMatrix(2, 2, {0, 1, 1, 0}), cd.h1(), cd.h1()};
  REQUIRE(error_code_of([&] { reflection_hat(cd, swap); }) == errc::not_intertwining);
}

TEST_CASE("kernel of J* is the complement of the domain image") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const CommonDomain cd = random_shared_domain(rng, 5);
    const DualityResult dr = duality_operator(cd);
    const OperatorBetween jop{dr.j, cd.h1(), cd.h2()};
    const OperatorBetween jjs = compose(jop, adjoint(jop));
    const DenseMatrix ker = null_space(jjs.matrix, cd.h2().gram);
    // dense image: complement should be empty
    REQUIRE(ker.cols + gram_rank(cd.image2(), cd.h2().gram) == cd.h2().dim);
  }
  // degenerate case: mu2 supported inside mu1 with a dead point in H2
  const CommonDomain cd = measure_pair_domain(make_discrete_measure({"a", "b"}, {1, 1}),
                                              make_discrete_measure({"a", "b"}, {2, 0}));
  const DualityResult dr = duality_operator(cd);
  const OperatorBetween jop{dr.j, cd.h1(), cd.h2()};
  const OperatorBetween jjs = compose(jop, adjoint(jop));
  REQUIRE(null_space(jjs.matrix, cd.h2().gram).cols == 0);  // image spans H2
}

TEST_CASE("friedrichs: identity and diagonal anchors") {
  const WeightedSpace h = euclidean_space(2);
  const FriedrichsResult fi =
      friedrichs_extension(full_domain_operator(h, DenseMatrix::identity(2)));
  REQUIRE(frobenius(sub(fi.extension.matrix, DenseMatrix::identity(2))) <= 1e-12);

  const FriedrichsResult fd =
      friedrichs_extension(full_domain_operator(h, DenseMatrix::diagonal({2, 5})));
  REQUIRE(frobenius(sub(fd.extension.matrix, DenseMatrix::diagonal({2, 5}))) <= 1e-11);
  REQUIRE(fd.contraction_norm <= 1.0 + 1e-12);
  REQUIRE(fd.pointwise_agreement <= 1e-12);
}

TEST_CASE("friedrichs: proper domain agrees in the form sense") {
  const WeightedSpace h = euclidean_space(3);
  DenseMatrix domain(3, 2);
  domain(0, 0) = 1.0;
  domain(1, 1) = 1.0;

  // invariant case: A maps D into D, so the agreement is pointwise
  const DomainOperator inv = make_domain_operator(h, DenseMatrix::diagonal({2, 3, 7}), domain);
  const FriedrichsResult fi = friedrichs_extension(inv);
  REQUIRE(fi.pseudo_inverted);
  REQUIRE(fi.complement_dim == 1);
  REQUIRE(fi.pointwise_agreement <= 1e-11);
  // the extension annihilates the complement (reported convention)
  const std::vector<double> e3 = {0, 0, 1};
  REQUIRE(norm2(matvec(fi.extension, e3)) <= 1e-11);

  // coupled case: agreement holds through the form, the oracle being the
  // direct Riesz representation of the form on D
  const DenseMatrix a(3, 3, {2, 0, 1, 0, 3, 0, 1, 0, 7});
  const DomainOperator coupled = make_domain_operator(h, a, domain);
  const FriedrichsResult fc = friedrichs_extension(coupled);
  REQUIRE(fc.form_agreement <= 1e-11);
  const DenseMatrix ga = mul(transpose(domain), mul(h.gram, mul(a, domain)));
  const DenseMatrix dd = mul(transpose(domain), mul(h.gram, domain));
  const DenseMatrix riesz = mul(domain, mul(cholesky_solve_matrix(cholesky_spd(dd), ga),
                                            pseudo_inverse(domain)));
  const DenseMatrix ext_on_d = mul(fc.extension.matrix, domain);
  const DenseMatrix oracle_on_d = mul(riesz, domain);
  REQUIRE(frobenius(sub(ext_on_d, oracle_on_d)) <= 1e-10);
}

TEST_CASE("friedrichs rejects operators below one") {
  const WeightedSpace h = euclidean_space(2);
  REQUIRE(error_code_of([&] {
            friedrichs_extension(full_domain_operator(h, DenseMatrix::diagonal({0.5, 2})));
          }) == errc::not_semibounded);
}

TEST_CASE("krein membership: inverse, inflated norm, and the friedrichs witness") {
  const WeightedSpace h = euclidean_space(2);
  const DomainOperator a = full_domain_operator(h, DenseMatrix::diagonal({2, 5}));
  const OperatorBetween inv{DenseMatrix::diagonal({0.5, 0.2}), h, h};
  REQUIRE(krein_membership(a, inv).member);

  const OperatorBetween big{DenseMatrix::diagonal({2.0, 0.2}), h, h};
  const KreinReport bad = krein_membership(a, big);
  REQUIRE_FALSE(bad.member);
  REQUIRE(bad.reason == "norm exceeds one");

  const FriedrichsResult fr = friedrichs_extension(a);
  REQUIRE(krein_membership(a, fr.jj_star).member);

  // proper-domain witness
  DenseMatrix domain(3, 2);
  domain(0, 0) = 1.0;
  domain(1, 1) = 1.0;
  const WeightedSpace h3 = euclidean_space(3);
  const DomainOperator ap =
      make_domain_operator(h3, DenseMatrix(3, 3, {2, 0, 1, 0, 3, 0, 1, 0, 7}), domain);
  REQUIRE(krein_membership(ap, friedrichs_extension(ap).jj_star).member);
}

TEST_CASE("krein membership over random semibounded instances") {
  std::mt19937 rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    const WeightedSpace h = testsup::random_space(rng, n, "H");
    const DenseMatrix b = testsup::random_matrix(rng, n, n);
    const DenseMatrix a = add(DenseMatrix::identity(n),
                              cholesky_solve_matrix(cholesky_spd(h.gram), mul(transpose(b), b)));
    const DomainOperator dop = full_domain_operator(h, a);
    const FriedrichsResult fr = friedrichs_extension(dop);
    REQUIRE(fr.pointwise_agreement <= 1e-9);
    REQUIRE(krein_membership(dop, fr.jj_star).member);
  }
}

TEST_CASE("form correspondence round trip") {
  const WeightedSpace h = euclidean_space(2);
  const OperatorBetween id{DenseMatrix::identity(2), h, h};
  const SemiboundedForm qi = form_of(id);
  REQUIRE(frobenius(sub(qi.form_matrix, h.gram)) <= 1e-12);
  REQUIRE(frobenius(sub(operator_of_form(qi).matrix, DenseMatrix::identity(2))) <= 1e-11);

  const OperatorBetween diag{DenseMatrix::diagonal({2, 5}), h, h};
  const SemiboundedForm qd = form_of(diag);
  REQUIRE(frobenius(sub(qd.form_matrix, DenseMatrix::diagonal({2, 5}))) <= 1e-11);
  REQUIRE(frobenius(sub(operator_of_form(qd).matrix, diag.matrix)) <= 1e-10);

  std::mt19937 rng(107);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    const WeightedSpace hs = testsup::random_space(rng, n, "H");
    const DenseMatrix b = testsup::random_matrix(rng, n, n);
    const DenseMatrix a = add(DenseMatrix::identity(n),
                              cholesky_solve_matrix(cholesky_spd(hs.gram), mul(transpose(b), b)));
    const OperatorBetween aop{a, hs, hs};
    const OperatorBetween back = operator_of_form(form_of(aop));
    REQUIRE(frobenius(sub(back.matrix, a)) <= 1e-9 * std::max(1.0, frobenius(a)));
  }
}

TEST_CASE("essential selfadjointness probe counts ranks") {
  const WeightedSpace h = euclidean_space(3);
  REQUIRE(essential_selfadjointness_probe(
              full_domain_operator(h, DenseMatrix::diagonal({2, 3, 7})))
              .dense);

  DenseMatrix domain(3, 2);
  domain(0, 0) = 1.0;
  domain(1, 1) = 1.0;
  const DensityReport rep = essential_selfadjointness_probe(
      make_domain_operator(h, DenseMatrix::diagonal({2, 3, 7}), domain));
  REQUIRE(rep.rank == 2);
  REQUIRE_FALSE(rep.dense);
}

TEST_CASE("reflection extends by zero off the closure of the domain") {
  // embed2 collapses the second coordinate, so ker(J*) is nontrivial
  const WeightedSpace h1 = euclidean_space(2, "H1");
  const WeightedSpace h2 = euclidean_space(2, "H2");
  const WeightedSpace ambient = euclidean_space(2, "ambient");
  DenseMatrix collapse(2, 2);
  collapse(0, 0) = 1.0;
  const CommonDomain cd = make_common_domain(
      DenseMatrix::identity(2), OperatorBetween{DenseMatrix::identity(2), ambient, h1},
      OperatorBetween{collapse, ambient, h2});

  const DualityResult dr = duality_operator(cd);
  REQUIRE(frobenius(sub(dr.delta.matrix, DenseMatrix::diagonal({1, 0}))) <= 1e-12);
  const OperatorBetween jop{dr.j, cd.h1(), cd.h2()};
  const OperatorBetween jjs = compose(jop, adjoint(jop));
  REQUIRE(null_space(jjs.matrix, h2.gram).cols == 1);  // nontrivial ker(J*)

  const OperatorBetween u{DenseMatrix::identity(2), h1, h1};
  const ReflectionResult rr = reflection_hat(cd, u);
  // identity on the closure of D in H2, zero on its complement
  REQUIRE(frobenius(sub(rr.u_hat.matrix, DenseMatrix::diagonal({1, 0}))) <= 1e-11);
  const std::vector<double> killed = matvec(rr.u_hat, {0, 1});
  REQUIRE(norm2(killed) <= 1e-12);
}

TEST_CASE("semibounded form constructor rejects forms below the norm") {
  const WeightedSpace h = euclidean_space(2);
  REQUIRE(testsup::error_code_of([&] {
            make_semibounded_form(h, DenseMatrix::diagonal({0.5, 2.0}));
          }) == errc::not_semibounded);
  REQUIRE(make_semibounded_form(h, DenseMatrix::diagonal({1.0, 2.0})).form_matrix(1, 1) == 2.0);
}
