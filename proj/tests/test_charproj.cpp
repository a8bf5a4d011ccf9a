#include <catch2/catch_amalgamated.hpp>

#include "opdual/charproj.hpp"
#include "opdual/duality.hpp"
#include "test_support.hpp"

using namespace opdual;
using testsup::error_code_of;

namespace {

OperatorBetween scalar_op(double value) {
  const WeightedSpace one = euclidean_space(1);
  return OperatorBetween{DenseMatrix(1, 1, {value}), one, one};
}

OperatorBetween random_operator(std::mt19937& rng, std::size_t n1, std::size_t n2) {
  return OperatorBetween{testsup::random_matrix(rng, n2, n1), testsup::random_space(rng, n1, "H1"),
                         testsup::random_space(rng, n2, "H2")};
}

// codomain at least as large as the domain, smallest singular value bounded
// away from zero: the regime where both Schur complements vanish
OperatorBetween random_injective_operator(std::mt19937& rng, std::size_t max_dim = 10) {
  for (;;) {
    const std::size_t n1 = 1 + rng() % (max_dim / 2);
    const std::size_t n2 = n1 + rng() % (max_dim - n1 + 1);
    OperatorBetween t = random_operator(rng, n1, n2);
    const EigenDecomposition dec =
        sym_eigen(mul(adjoint(t).matrix, t.matrix), t.domain.gram, 1e-8);
    if (dec.values.front() >= 1e-4) return t;  // sigma_min >= 1e-2
  }
}

}  // namespace

TEST_CASE("char projection: zero operator") {
  const BlockProjection e = char_projection(scalar_op(0.0));
  REQUIRE(e.e11(0, 0) == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(std::abs(e.e12(0, 0)) < 1e-14);
  REQUIRE(std::abs(e.e21(0, 0)) < 1e-14);
  REQUIRE(std::abs(e.e22(0, 0)) < 1e-14);
}

TEST_CASE("char projection: identity gives the half projection") {
  const BlockProjection e = char_projection(scalar_op(1.0));
  for (double v : e.full().a) REQUIRE(v == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("char projection: scalar two anchor") {
  const BlockProjection e = char_projection(scalar_op(2.0));
  REQUIRE(e.e11(0, 0) == Catch::Approx(0.2).margin(1e-14));
  REQUIRE(e.e12(0, 0) == Catch::Approx(0.4).margin(1e-14));
  REQUIRE(e.e21(0, 0) == Catch::Approx(0.4).margin(1e-14));
  REQUIRE(e.e22(0, 0) == Catch::Approx(0.8).margin(1e-14));
  REQUIRE(e.idempotent_residual() < 1e-14);
  REQUIRE(e.selfadjoint_residual() < 1e-14);
}

TEST_CASE("char projection of the adjoint: zero and scalar cases") {
  const BlockProjection e0 = char_projection_of_adjoint(char_projection(scalar_op(0.0)));
  REQUIRE(e0.e11(0, 0) == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(std::abs(e0.e22(0, 0)) < 1e-14);

  const BlockProjection e2 = char_projection_of_adjoint(char_projection(scalar_op(2.0)));
  const BlockProjection direct = char_projection(adjoint(scalar_op(2.0)));
  REQUIRE(frobenius(sub(e2.full(), direct.full())) < 1e-14);
}

TEST_CASE("char projection of the adjoint matches the direct route") {
  std::mt19937 rng(41);
  const OperatorBetween t = random_operator(rng, 3, 4);
  const BlockProjection via_blocks = char_projection_of_adjoint(char_projection(t));
  const BlockProjection direct = char_projection(adjoint(t));
  REQUIRE(frobenius(sub(via_blocks.full(), direct.full())) <= 1e-10);
}

TEST_CASE("stone identities: zero, scalar, and random weighted instances") {
  REQUIRE(stone_identities(scalar_op(0.0), char_projection(scalar_op(0.0))).max_residual < 1e-15);
  REQUIRE(stone_identities(scalar_op(2.0), char_projection(scalar_op(2.0))).max_residual <= 1e-12);

  std::mt19937 rng(43);
  const OperatorBetween t = random_operator(rng, 4, 6);
  REQUIRE(stone_identities(t, char_projection(t)).max_residual <= 1e-10);
}

TEST_CASE("schur complements: scalar and identity anchors") {
  const SchurComplements s2 = schur_complements(char_projection(scalar_op(2.0)));
  REQUIRE(max_abs(s2.over_e11) <= 1e-14);
  REQUIRE(max_abs(s2.over_e22) <= 1e-14);
  REQUIRE_FALSE(s2.e22_pseudo_inverted);

  const SchurComplements s1 = schur_complements(char_projection(scalar_op(1.0)));
  REQUIRE(max_abs(s1.over_e11) <= 1e-14);
  REQUIRE(max_abs(s1.over_e22) <= 1e-14);
}

TEST_CASE("schur complements: the zero operator documents the pseudo-inverse convention") {
  const BlockProjection e = char_projection(scalar_op(0.0));
  const SchurComplements s = schur_complements(e);
  REQUIRE(max_abs(s.over_e11) <= 1e-14);
  REQUIRE(s.over_e22(0, 0) == Catch::Approx(1.0).margin(1e-14));  // E11 - 0 = I
  REQUIRE(s.e22_pseudo_inverted);
  REQUIRE(error_code_of([&] { schur_complements(e, /*strict=*/true); }) == errc::singular_block);
}

TEST_CASE("projection invariants and vanishing Schur complements on the random suite") {
  std::mt19937 rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const OperatorBetween t = random_injective_operator(rng);
    const BlockProjection e = char_projection(t);
    REQUIRE(e.idempotent_residual() <= 1e-10);
    REQUIRE(e.selfadjoint_residual() <= 1e-10);
    REQUIRE(stone_identities(t, e).max_residual <= 1e-10);
    const SchurComplements s = schur_complements(e);
    REQUIRE(frobenius(s.over_e11) <= 1e-9);
    REQUIRE(frobenius(s.over_e22) <= 1e-9);

    const BlockProjection via = char_projection_of_adjoint(e);
    const BlockProjection direct = char_projection(adjoint(t));
    REQUIRE(frobenius(sub(via.full(), direct.full())) <= 1e-10);
  }
}

TEST_CASE("analyze_graph: rebuilds the scalar operator from its span") {
  const OperatorBetween two = scalar_op(2.0);
  const GraphAnalysis ga =
      analyze_graph(graph_subspace(two), DirectSum{two.domain, two.codomain});
  REQUIRE(ga.closable);
  REQUIRE(ga.singular_dim == 0);
  REQUIRE(require_operator(ga).matrix(0, 0) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("analyze_graph: a span with a vertical direction is not a graph") {
  const DirectSum ds{euclidean_space(1), euclidean_space(1)};
  const DenseMatrix gens(2, 2, {1, 0, 1, 1});  // (1;1) and (0;1)
  const GraphAnalysis ga = analyze_graph(gens, ds);
  REQUIRE_FALSE(ga.closable);
  REQUIRE(ga.singular_dim == 1);
  REQUIRE(error_code_of([&] { require_operator(ga); }) == errc::not_a_graph);
  REQUIRE(frobenius(sub(ga.projection.full(), DenseMatrix::identity(2))) < 1e-12);
}

TEST_CASE("analyze_graph: mutually singular measures close up to the full sum") {
  const DiscreteMeasureSpace mu1 = make_discrete_measure({"a", "b"}, {1, 0});
  const DiscreteMeasureSpace mu2 = make_discrete_measure({"a", "b"}, {0, 1});
  const CommonDomain cd = measure_pair_domain(mu1, mu2);
  const DirectSum ds{cd.h1(), cd.h2()};
  const DenseMatrix gens = vstack(cd.image1(), cd.image2());
  const GraphAnalysis ga = analyze_graph(gens, ds);
  REQUIRE(ga.singular_dim == cd.h2().dim);
  REQUIRE_FALSE(ga.closable);
}

TEST_CASE("analyze_graph: recovers random operators from their graphs") {
  std::mt19937 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n1 = 1 + rng() % 5, n2 = 1 + rng() % 5;
    const OperatorBetween t = random_operator(rng, n1, n2);
    const GraphAnalysis ga =
        analyze_graph(graph_subspace(t), DirectSum{t.domain, t.codomain});
    REQUIRE(ga.closable);
    REQUIRE(ga.kernel_limit_residual <= 1e-6);
    REQUIRE(frobenius(sub(require_operator(ga).matrix, t.matrix)) <=
            1e-9 * std::max(1.0, frobenius(t.matrix)));
    // the span projection agrees with the block formula route
    REQUIRE(frobenius(sub(ga.projection.full(), char_projection(t).full())) <= 1e-9);
  }
}

TEST_CASE("ergodic limit of E22 powers matches the kernel projector") {
  std::mt19937 rng(59);
  for (int trial = 0; trial < 25; ++trial) {
    const OperatorBetween t = random_operator(rng, 1 + rng() % 5, 1 + rng() % 5);
    const BlockProjection e = char_projection(t);
    // everywhere-defined finite operators are closed: the kernel is trivial
    // and the squared powers collapse to zero
    REQUIRE(frobenius(power_limit(e.e22)) <= 1e-6);
    // the literal finite-n mean obeys its O(1/(n*gap)) rate, nothing better
    const DenseMatrix mean = cesaro_mean(e.e22, 10000);
    REQUIRE(frobenius(mean) <= 1e-2);
  }
}

TEST_CASE("cesaro mean approaches the vertical projector on a singular span") {
  const DirectSum ds{euclidean_space(1), euclidean_space(1)};
  const DenseMatrix gens(2, 1, {0, 1});  // pure vertical direction
  const GraphAnalysis ga = analyze_graph(gens, ds);
  REQUIRE(ga.singular_dim == 1);
  const DenseMatrix mean = cesaro_mean(ga.projection.e22, 2000);
  REQUIRE(mean(0, 0) == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(ga.kernel_limit_residual <= 1e-9);
}
