#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opdual/duality.hpp"
#include "opdual/errors.hpp"
#include "opdual/factorization.hpp"
#include "opdual/sparse.hpp"
#include "opdual/sympair.hpp"

namespace opdual {

/// A finite resistor network: labelled vertices, undirected conductance-
/// weighted edges stored once, and a distinguished base vertex.
struct Network {
  struct Edge {
    std::size_t u, v;
    double conductance;
  };

  std::string name;
  std::vector<std::string> vertices;
  std::vector<Edge> edges;
  std::size_t base = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i] == label) return i;
    fail(errc::vertex_missing, "no vertex labelled '" + label + "'");
  }

  bool has_vertex(const std::string& label) const {
    return std::find(vertices.begin(), vertices.end(), label) != vertices.end();
  }

  /// total conductance c(x) = sum of incident edge conductances
  double total_conductance(std::size_t x) const {
    double s = 0.0;
    for (const auto& [y, c] : adjacency[x]) s += c;
    return s;
  }
};

inline Network make_network(std::string name, std::vector<std::string> vertices,
                            std::vector<std::tuple<std::string, std::string, double>> edges,
                            const std::string& base_label) {
  Network n;
  n.name = std::move(name);
  n.vertices = std::move(vertices);
  {
    std::set<std::string> uniq(n.vertices.begin(), n.vertices.end());
    if (uniq.size() != n.vertices.size()) fail(errc::invalid, "duplicate vertex label");
  }
  n.base = n.index_of(base_label);
  n.adjacency.resize(n.vertices.size());

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [ul, vl, c] : edges) {
    const std::size_t u = n.index_of(ul), v = n.index_of(vl);
    if (u == v) fail(errc::invalid, "self-loop at '" + ul + "'");
    if (!(c > 0.0) || !std::isfinite(c))
      fail(errc::nonpositive_conductance, "edge " + ul + "-" + vl);
    const auto key = std::minmax(u, v);
    if (!seen.insert(key).second) fail(errc::invalid, "duplicate edge " + ul + "-" + vl);
    n.edges.push_back({u, v, c});
    n.adjacency[u].push_back({v, c});
    n.adjacency[v].push_back({u, c});
  }

  // connectivity
  std::vector<char> reached(n.vertices.size(), 0);
  std::vector<std::size_t> stack{0};
  reached[0] = 1;
  while (!stack.empty()) {
    const std::size_t x = stack.back();
    stack.pop_back();
    for (const auto& [y, c] : n.adjacency[x])
      if (!reached[y]) {
        reached[y] = 1;
        stack.push_back(y);
      }
  }
  if (std::count(reached.begin(), reached.end(), 1) != long(n.vertices.size()))
    fail(errc::not_connected, "network has more than one component");
  return n;
}

/// (Delta u)(x) = sum_{y~x} c_xy (u(x) - u(y))
inline std::vector<double> laplacian_apply(const Network& n, const std::vector<double>& u) {
  if (u.size() != n.vertices.size()) fail(errc::invalid, "function size mismatch");
  std::vector<double> out(u.size(), 0.0);
  for (const auto& e : n.edges) {
    const double d = e.conductance * (u[e.u] - u[e.v]);
    out[e.u] += d;
    out[e.v] -= d;
  }
  return out;
}

/// <u,v>_E, each undirected edge counted once (the half convention).
inline double energy_inner(const Network& n, const std::vector<double>& u,
                           const std::vector<double>& v) {
  if (u.size() != n.vertices.size() || v.size() != n.vertices.size())
    fail(errc::invalid, "function size mismatch");
  double s = 0.0;
  for (const auto& e : n.edges)
    s += e.conductance * (u[e.u] - u[e.v]) * (v[e.u] - v[e.v]);
  return s;
}

inline double energy_norm(const Network& n, const std::vector<double>& u) {
  return std::sqrt(std::max(0.0, energy_inner(n, u, u)));
}

inline SparseSymmetric laplacian_sparse(const Network& n) {
  std::map<std::pair<std::size_t, std::size_t>, double> acc;
  for (const auto& e : n.edges) {
    acc[{e.u, e.u}] += e.conductance;
    acc[{e.v, e.v}] += e.conductance;
    const auto key = std::minmax(e.u, e.v);
    acc[{key.first, key.second}] -= e.conductance;
  }
  std::vector<SparseSymmetric::Triplet> t;
  for (const auto& [k, v] : acc) t.push_back({k.first, k.second, v});
  return make_sparse_symmetric(n.vertices.size(), std::move(t));
}

inline DenseMatrix laplacian_dense(const Network& n) { return to_dense(laplacian_sparse(n)); }

/// grounded index map: positions of the non-base vertices, in vertex order
inline std::vector<std::size_t> grounded_indices(const Network& n) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n.vertices.size(); ++i)
    if (i != n.base) idx.push_back(i);
  return idx;
}

/// Laplacian with the base row and column removed: the gram of the energy
/// space under the pinning convention. SPD on connected networks.
inline DenseMatrix grounded_laplacian(const Network& n) {
  const DenseMatrix full = laplacian_dense(n);
  const std::vector<std::size_t> idx = grounded_indices(n);
  DenseMatrix g(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) g(i, j) = full(idx[i], idx[j]);
  return g;
}

namespace detail {

inline constexpr std::size_t dense_solve_cutoff = 200;

// Solve Delta v = rhs with v pinned to zero at `pin`; dense below the
// cutoff, diagonally preconditioned CG above it.
inline std::vector<double> grounded_solve(const Network& n, const std::vector<double>& rhs,
                                          std::size_t pin) {
  const std::size_t nv = n.vertices.size();
  if (nv <= dense_solve_cutoff) {
    const DenseMatrix full = laplacian_dense(n);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < nv; ++i)
      if (i != pin) idx.push_back(i);
    DenseMatrix g(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) g(i, j) = full(idx[i], idx[j]);
    std::vector<double> b(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) b[i] = rhs[idx[i]];
    const std::vector<double> x = cholesky_solve(cholesky_spd(g), b);
    std::vector<double> out(nv, 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = x[i];
    return out;
  }
  SolveOptions opt;
  opt.ground = pin;
  return solve_spd(laplacian_sparse(n), rhs, opt);
}

}  // namespace detail

/// The dipole v_x: the finite-energy solution of Delta v = delta_x - delta_o
/// pinned to zero at the base, reproducing point differences against the
/// energy inner product.
inline std::vector<double> dipole(const Network& n, const std::string& x_label) {
  const std::size_t x = n.index_of(x_label);
  if (x == n.base) fail(errc::same_as_base, "dipole at the base vertex");
  std::vector<double> rhs(n.vertices.size(), 0.0);
  rhs[x] = 1.0;
  rhs[n.base] = -1.0;
  return detail::grounded_solve(n, rhs, n.base);
}

/// Effective resistance between two vertices: the potential drop of the
/// unit-current solve.
inline double effective_resistance(const Network& n, const std::string& x_label,
                                   const std::string& y_label) {
  const std::size_t x = n.index_of(x_label), y = n.index_of(y_label);
  if (x == y) fail(errc::invalid, "resistance needs two distinct vertices");
  std::vector<double> rhs(n.vertices.size(), 0.0);
  rhs[x] = 1.0;
  rhs[y] = -1.0;
  return detail::grounded_solve(n, rhs, y)[x];
}

/// Residual, in energy norm, of delta_x = c(x) v_x - sum_{y~x} c_xy v_y
/// (with v_o = 0 for the base).
inline double delta_identity_residual(const Network& n, const std::string& x_label) {
  const std::size_t x = n.index_of(x_label);
  const std::size_t nv = n.vertices.size();
  std::vector<double> combo(nv, 0.0);
  auto add_dipole = [&](std::size_t v, double coeff) {
    if (v == n.base) return;  // v_o = 0
    const std::vector<double> d = dipole(n, n.vertices[v]);
    for (std::size_t i = 0; i < nv; ++i) combo[i] += coeff * d[i];
  };
  add_dipole(x, n.total_conductance(x));
  for (const auto& [y, c] : n.adjacency[x]) add_dipole(y, -c);
  std::vector<double> delta_x(nv, 0.0);
  delta_x[x] = 1.0;
  return energy_norm(n, vsub(delta_x, combo));
}

struct Sqrt2Report {
  double max_ratio = 0.0;       // over random finitely-supported functions
  double attained_ratio = 0.0;  // at phi = delta_x - delta_o
};

/// |<phi, v_x>_E| <= sqrt(2) |phi|_{l2}; the bound is attained by
/// phi = delta_x - delta_o.
inline Sqrt2Report sqrt2_bound_check(const Network& n, const std::string& x_label,
                                     std::size_t trials, unsigned seed = 1) {
  const std::vector<double> vx = dipole(n, x_label);
  const std::size_t nv = n.vertices.size();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, nv - 1);

  Sqrt2Report rep;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> phi(nv, 0.0);
    const std::size_t support = 1 + pick(rng) % nv;
    for (std::size_t s = 0; s < support; ++s) phi[pick(rng)] = coef(rng);
    const double l2 = norm2(phi);
    if (l2 == 0.0) continue;
    rep.max_ratio = std::max(rep.max_ratio, std::abs(energy_inner(n, phi, vx)) / l2);
  }
  std::vector<double> extremal(nv, 0.0);
  extremal[n.index_of(x_label)] = 1.0;
  extremal[n.base] -= 1.0;
  rep.attained_ratio = std::abs(energy_inner(n, extremal, vx)) / norm2(extremal);
  rep.max_ratio = std::max(rep.max_ratio, rep.attained_ratio);
  return rep;
}

/// The K/L pair on a finite network: K : l2(V) -> H_E sends delta_x to
/// itself (expanded in the dipole basis), L : H_E -> l2(V) sends v_x to
/// delta_x - delta_o. H_E carries dipole coordinates, whose gram is the
/// inverse grounded Laplacian.
struct KlPair {
  SymmetricPair pair;   // a = K, b = L
  WeightedSpace l2;     // euclidean on V
  WeightedSpace energy; // dipole coordinates on V \ {o}
  DenseMatrix k;        // (|V|-1) x |V|
  DenseMatrix l;        // |V| x (|V|-1)
  double s14_residual = 0.0;  // <K delta_x, v_y>_E vs delta_xy - delta_xo
};

inline KlPair kl_pair(const Network& n) {
  const std::size_t nv = n.vertices.size();
  const std::vector<std::size_t> idx = grounded_indices(n);
  const DenseMatrix lg = grounded_laplacian(n);
  const DenseMatrix ge = cholesky_solve_matrix(cholesky_spd(lg), DenseMatrix::identity(idx.size()));

  KlPair out{
      SymmetricPair{},
      euclidean_space(nv, "l2(V)"),
      make_weighted_space(ge, "H_E"),
      DenseMatrix(idx.size(), nv),
      DenseMatrix(nv, idx.size()),
  };

  const DenseMatrix full = laplacian_dense(n);
  for (std::size_t x = 0; x < nv; ++x)
    for (std::size_t i = 0; i < idx.size(); ++i) out.k(i, x) = full(idx[i], x);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.l(idx[j], j) = 1.0;
    out.l(n.base, j) -= 1.0;
  }

  out.pair = make_symmetric_pair(OperatorBetween{out.k, out.l2, out.energy},
                                 OperatorBetween{out.l, out.energy, out.l2});

  const DenseMatrix table = mul(out.energy.gram, out.k);  // <v_y, K delta_x>_E entries
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t x = 0; x < nv; ++x) {
      const double expected = (idx[i] == x ? 1.0 : 0.0) - (x == n.base ? 1.0 : 0.0);
      out.s14_residual = std::max(out.s14_residual, std::abs(table(i, x) - expected));
    }
  return out;
}

struct SelfadjointProducts {
  DenseMatrix kk;  // on l2(V)
  DenseMatrix ll;  // on H_E (dipole coordinates)
  double kk_vs_laplacian = 0.0;
  double ll_dipole_residual = 0.0;  // L*L v_x vs delta_x - delta_o
  double ll_min_eigenvalue = 0.0;
};

/// K*K recovers the graph Laplacian on l2; L*L maps each dipole to
/// delta_x - delta_o and has trivial kernel on finite networks.
inline SelfadjointProducts selfadjoint_products(const Network& n, const KlPair& klp) {
  SelfadjointProducts out;
  out.kk = mul(adjoint(klp.pair.a).matrix, klp.k);
  out.ll = mul(adjoint(klp.pair.b).matrix, klp.l);
  out.kk_vs_laplacian = frobenius(sub(out.kk, laplacian_dense(n)));

  const std::vector<std::size_t> idx = grounded_indices(n);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    // delta_x - delta_o in dipole coordinates is K[:,x] - K[:,o]
    std::vector<double> expected(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      expected[i] = klp.k(i, idx[j]) - klp.k(i, n.base);
    const std::vector<double> got = matvec(out.ll, basis_vector(idx.size(), j));
    out.ll_dipole_residual =
        std::max(out.ll_dipole_residual, norm(klp.energy, vsub(got, expected)));
  }
  const EigenDecomposition dec = sym_eigen(out.ll, klp.energy.gram, 1e-7);
  out.ll_min_eigenvalue = dec.values.empty() ? 0.0 : dec.values.front();
  return out;
}

struct NetworkDuality {
  CommonDomain cd;
  OperatorBetween delta;
  double laplacian_residual = 0.0;
  double t3_residual = 0.0;
};

/// The two-Hilbert-space structure of a network: H1 = l2(V), H2 = H_E,
/// D = span of the point masses. The duality operator is the graph
/// Laplacian.
inline NetworkDuality network_duality(const Network& n) {
  KlPair klp = kl_pair(n);
  const std::size_t nv = n.vertices.size();
  WeightedSpace ambient = euclidean_space(nv, "ambient");
  CommonDomain cd = make_common_domain(
      DenseMatrix::identity(nv),
      OperatorBetween{DenseMatrix::identity(nv), ambient, klp.l2},
      OperatorBetween{klp.k, ambient, klp.energy});
  const DualityResult dr = duality_operator(cd);
  const double lap_res = frobenius(sub(dr.delta.matrix, laplacian_dense(n)));
  return NetworkDuality{std::move(cd), dr.delta, lap_res, dr.t3_residual};
}

struct BigLReport {
  std::vector<double> eigenvalues;  // of A*B* on l2(V)
  double min_distance_to_minus_one = 0.0;
  std::pair<std::size_t, std::size_t> indices{0, 0};
};

/// Finite shadow of essential selfadjointness of the block operator: the
/// assembled A*B* is the graph Laplacian, PSD, so nothing sits near -1 and
/// the indices are (0,0).
inline BigLReport big_l_selfadjointness_probe(const Network& n, double eig_tol = 1e-8) {
  const KlPair klp = kl_pair(n);
  const DefectReport rep = defect_space(klp.pair, eig_tol);
  BigLReport out;
  out.eigenvalues = rep.astar_bstar_eigenvalues;
  out.indices = rep.indices;
  out.min_distance_to_minus_one = 1e300;
  for (double v : out.eigenvalues)
    out.min_distance_to_minus_one = std::min(out.min_distance_to_minus_one, std::abs(v + 1.0));
  return out;
}

struct NormComparability {
  double max_total_conductance = 0.0;  // max_x |delta_x|_E^2 / |delta_x|_l2^2
  std::string argmax_vertex;
  double max_dipole_ratio = 0.0;       // max_x |v_x|_l2^2 / |v_x|_E^2
};

/// The two norms are not comparable in general: |delta_x|_E^2 = c(x) can be
/// unbounded over a family, and dipole directions bound the reverse ratio.
inline NormComparability norm_comparability_probe(const Network& n) {
  NormComparability out;
  for (std::size_t x = 0; x < n.vertices.size(); ++x) {
    const double c = n.total_conductance(x);
    if (c > out.max_total_conductance) {
      out.max_total_conductance = c;
      out.argmax_vertex = n.vertices[x];
    }
  }
  for (std::size_t x = 0; x < n.vertices.size(); ++x) {
    if (x == n.base) continue;
    const std::vector<double> vx = dipole(n, n.vertices[x]);
    const double e2 = energy_inner(n, vx, vx);
    if (e2 > 0.0) out.max_dipole_ratio = std::max(out.max_dipole_ratio, dot(vx, vx) / e2);
  }
  return out;
}

// --- exhaustion families -----------------------------------------------

enum class FamilyKind { path, lattice2d, binary_tree };

struct ExhaustionLevel {
  std::size_t param = 0;
  Network free_net;
  Network wired_net;  // boundary merged into one vertex
  std::vector<std::string> boundary;
};

struct ExhaustionFamily {
  FamilyKind kind{};
  double ratio = 1.0;
  std::vector<ExhaustionLevel> levels;
};

namespace detail {

inline Network wire_boundary(const Network& free_net, const std::vector<std::string>& boundary,
                             const std::string& merged_label = "@boundary") {
  std::set<std::size_t> bset;
  for (const auto& b : boundary) bset.insert(free_net.index_of(b));
  std::vector<std::string> vertices;
  for (std::size_t i = 0; i < free_net.vertices.size(); ++i)
    if (!bset.count(i)) vertices.push_back(free_net.vertices[i]);
  vertices.push_back(merged_label);

  std::map<std::pair<std::string, std::string>, double> acc;
  for (const auto& e : free_net.edges) {
    const bool bu = bset.count(e.u) > 0, bv = bset.count(e.v) > 0;
    if (bu && bv) continue;  // shorted away
    std::string a = bu ? merged_label : free_net.vertices[e.u];
    std::string b = bv ? merged_label : free_net.vertices[e.v];
    if (a > b) std::swap(a, b);
    acc[{a, b}] += e.conductance;  // parallel edges add
  }
  std::vector<std::tuple<std::string, std::string, double>> edges;
  for (const auto& [k, c] : acc) edges.emplace_back(k.first, k.second, c);
  const std::string base = free_net.vertices[free_net.base];
  return make_network(free_net.name + "/wired", std::move(vertices), std::move(edges),
                      bset.count(free_net.base) ? merged_label : base);
}

}  // namespace detail

inline ExhaustionFamily make_family(FamilyKind kind, const std::vector<std::size_t>& params,
                                    double ratio = 1.0) {
  ExhaustionFamily fam{kind, ratio, {}};
  for (std::size_t p : params) {
    std::vector<std::string> vertices;
    std::vector<std::tuple<std::string, std::string, double>> edges;
    std::vector<std::string> boundary;
    std::string base;

    switch (kind) {
      case FamilyKind::path: {
        if (p < 2) fail(errc::invalid, "path level needs at least 2 vertices");
        for (std::size_t i = 0; i <= p; ++i) vertices.push_back(std::to_string(i));
        for (std::size_t i = 0; i < p; ++i)
          edges.emplace_back(std::to_string(i), std::to_string(i + 1), 1.0);
        boundary = {std::to_string(p)};
        base = "0";
        break;
      }
      case FamilyKind::lattice2d: {
        if (p < 2) fail(errc::invalid, "lattice level needs size >= 2");
        auto lab = [](std::size_t r, std::size_t c) {
          return std::to_string(r) + "," + std::to_string(c);
        };
        for (std::size_t r = 0; r < p; ++r)
          for (std::size_t c = 0; c < p; ++c) vertices.push_back(lab(r, c));
        for (std::size_t r = 0; r < p; ++r)
          for (std::size_t c = 0; c < p; ++c) {
            if (r + 1 < p) edges.emplace_back(lab(r, c), lab(r + 1, c), 1.0);
            if (c + 1 < p) edges.emplace_back(lab(r, c), lab(r, c + 1), 1.0);
          }
        for (std::size_t r = 0; r < p; ++r)
          for (std::size_t c = 0; c < p; ++c)
            if (r == p - 1 || c == p - 1) boundary.push_back(lab(r, c));
        base = lab(0, 0);
        break;
      }
      case FamilyKind::binary_tree: {
        if (p < 2) fail(errc::invalid, "tree level needs depth >= 2");
        const std::size_t count = (std::size_t(1) << (p + 1)) - 1;
        for (std::size_t i = 0; i < count; ++i) vertices.push_back(std::to_string(i));
        for (std::size_t i = 0; i < count; ++i) {
          std::size_t depth = 0;
          for (std::size_t t = i + 1; t > 1; t >>= 1) ++depth;
          const double c = std::pow(ratio, double(depth));
          for (std::size_t ch : {2 * i + 1, 2 * i + 2})
            if (ch < count) edges.emplace_back(std::to_string(i), std::to_string(ch), c);
        }
        const std::size_t first_leaf = (std::size_t(1) << p) - 1;
        for (std::size_t i = first_leaf; i < count; ++i) boundary.push_back(std::to_string(i));
        base = "0";
        break;
      }
    }
    Network free_net = make_network("level" + std::to_string(p), std::move(vertices),
                                    std::move(edges), base);
    Network wired_net = detail::wire_boundary(free_net, boundary);
    fam.levels.push_back({p, std::move(free_net), std::move(wired_net), std::move(boundary)});
  }
  return fam;
}

struct LevelGap {
  std::size_t param = 0;
  double r_free = 0.0;
  double r_wired = 0.0;
  double gap = 0.0;
};

/// Effective resistance between x and y under free and wired boundary at
/// every level. A persistent positive gap is the desk-scale signature of
/// nontrivial harmonic functions; a vanishing gap signals Harm = {0}.
inline std::vector<LevelGap> exhaustion_harmonics(const ExhaustionFamily& fam,
                                                  const std::string& x, const std::string& y) {
  std::vector<LevelGap> out;
  for (const auto& lvl : fam.levels) {
    if (!lvl.free_net.has_vertex(x) || !lvl.free_net.has_vertex(y) ||
        !lvl.wired_net.has_vertex(x) || !lvl.wired_net.has_vertex(y))
      fail(errc::vertex_missing, "probe vertices must be interior to every level");
    LevelGap g;
    g.param = lvl.param;
    g.r_free = effective_resistance(lvl.free_net, x, y);
    g.r_wired = effective_resistance(lvl.wired_net, x, y);
    g.gap = g.r_free - g.r_wired;
    out.push_back(g);
  }
  return out;
}

}  // namespace opdual
