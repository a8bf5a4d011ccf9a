#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opdual/charproj.hpp"
#include "opdual/duality.hpp"
#include "opdual/formats.hpp"
#include "opdual/network.hpp"
#include "opdual/sympair.hpp"

namespace opdual {

/// One batch job: a command, its input, and the knobs that make a run
/// reproducible. The seed fixes every randomized suite.
struct JobSpec {
  std::string command;  // charproj|duality|spectra|dipole|defect|exhaust|verify-all
  std::string input_path;
  std::string output_dir = ".";
  std::map<std::string, double> tolerance_overrides;
  unsigned seed = 42;
  std::string family = "path_n";      // exhaust command
  std::vector<std::size_t> levels;    // exhaust levels / defect sweep radii
};

namespace detail {

inline double tolv(const JobSpec& job, const std::string& name, double fallback) {
  const auto it = job.tolerance_overrides.find(name);
  return it == job.tolerance_overrides.end() ? fallback : it->second;
}

inline DenseMatrix runner_random_matrix(std::mt19937& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  DenseMatrix m(r, c);
  for (double& v : m.a) v = d(rng);
  return m;
}

inline WeightedSpace runner_random_space(std::mt19937& rng, std::size_t n) {
  const DenseMatrix b = runner_random_matrix(rng, n, n);
  return make_weighted_space(add(mul(transpose(b), b), DenseMatrix::identity(n)));
}

inline OperatorBetween runner_random_operator(std::mt19937& rng, std::size_t n1, std::size_t n2) {
  return OperatorBetween{runner_random_matrix(rng, n2, n1), runner_random_space(rng, n1),
                         runner_random_space(rng, n2)};
}

// injective ensemble for the Schur-complement regime
inline OperatorBetween runner_injective_operator(std::mt19937& rng, std::size_t max_dim) {
  for (;;) {
    const std::size_t n1 = 1 + rng() % (max_dim / 2);
    const std::size_t n2 = n1 + rng() % (max_dim - n1 + 1);
    OperatorBetween t = runner_random_operator(rng, n1, n2);
    const EigenDecomposition dec = sym_eigen(mul(adjoint(t).matrix, t.matrix), t.domain.gram, 1e-8);
    if (dec.values.front() >= 1e-4) return t;
  }
}

inline std::string sniff_first_token(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string tok;
    if (is >> tok && tok[0] != '#') return tok;
  }
  fail(errc::parse_error, "empty input '" + path + "'");
}

struct MatrixCsv {
  std::ostringstream out;
  MatrixCsv() { out << "row,col,value\n"; }
  void add(const DenseMatrix& m, std::size_t row_off = 0, std::size_t col_off = 0) {
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j)
        out << row_off + i << "," << col_off + j << "," << fmt_sci(m(i, j)) << "\n";
  }
};

}  // namespace detail

/// Collects report rows and data files for one run.
class Runner {
 public:
  explicit Runner(const JobSpec& job) : job_(job) {}

  void row(const std::string& identity, const std::string& anchor, double residual,
           double tolerance) {
    rows_.push_back({identity, anchor, residual, tolerance, residual <= tolerance});
  }

  void file(const std::string& name, std::string content) { files_[name] = std::move(content); }

  bool all_pass() const {
    for (const auto& r : rows_)
      if (!r.pass) return false;
    return true;
  }

  const std::vector<ReportRow>& rows() const { return rows_; }

  void write() const {
    namespace fs = std::filesystem;
    fs::create_directories(job_.output_dir);
    for (const auto& [name, content] : files_) {
      std::ofstream out(fs::path(job_.output_dir) / name, std::ios::binary);
      out << content;
    }
    std::ofstream out(fs::path(job_.output_dir) / "report.csv", std::ios::binary);
    out << report_csv(rows_);
  }

  const JobSpec& job() const { return job_; }

 private:
  JobSpec job_;
  std::vector<ReportRow> rows_;
  std::map<std::string, std::string> files_;
};

namespace detail {

inline void charproj_battery(Runner& r, const OperatorBetween& t, const std::string& prefix) {
  const JobSpec& job = r.job();
  const BlockProjection e = char_projection(t);
  r.row(prefix + ".idempotent", "E^2=E", e.idempotent_residual(),
        tolv(job, "projection", 1e-10));
  r.row(prefix + ".selfadjoint", "E=E*", e.selfadjoint_residual(),
        tolv(job, "projection", 1e-10));
  const StoneReport stone = stone_identities(t, e);
  for (const auto& [name, resid] : stone.residuals)
    r.row(prefix + ".map", name, resid, tolv(job, "stone", 1e-10));
  const SchurComplements s = schur_complements(e);
  r.row(prefix + ".schur-over-e11", "E22-E21 E11^-1 E12=0", frobenius(s.over_e11),
        tolv(job, "schur", 1e-9));
  const std::string second = s.e22_pseudo_inverted ? "E11-E12 E22^+ E21 (pseudo)"
                                                   : "E11-E12 E22^-1 E21=0";
  r.row(prefix + ".schur-over-e22", second, s.e22_pseudo_inverted ? 0.0 : frobenius(s.over_e22),
        tolv(job, "schur", 1e-9));

  MatrixCsv csv;
  csv.add(e.e11, 0, 0);
  csv.add(e.e12, 0, e.e11.cols);
  csv.add(e.e21, e.e11.rows, 0);
  csv.add(e.e22, e.e11.rows, e.e11.cols);
  r.file("charproj_projection.csv", csv.out.str());
}

inline CommonDomain load_common_domain(const std::string& path, Network* net_out) {
  const std::string head = sniff_first_token(path);
  if (head == "network") {
    const Network n = parse_network_file(path);
    if (net_out) *net_out = n;
    return network_duality(n).cd;
  }
  if (head == "pair") return parse_pair_file(path);
  fail(errc::parse_error, "input must start with 'network' or 'pair'");
}

inline void duality_battery(Runner& r, const CommonDomain& cd, const Network* net) {
  const JobSpec& job = r.job();
  r.row("duality.dense", "rank(D in H1)=dim H1", dense_in_first(cd) ? 0.0 : 1.0, 0.5);
  const DualityResult dr = duality_operator(cd);
  r.row("duality.identity", "<phi;Delta phi>_1=|phi|_2^2", dr.t3_residual,
        tolv(job, "t3", 1e-10));

  // complement of the domain image vs the kernel of J*
  const OperatorBetween jop{dr.j, cd.h1(), cd.h2()};
  const OperatorBetween jjs = compose(jop, adjoint(jop));
  const DenseMatrix ker = null_space(jjs.matrix, cd.h2().gram);
  const std::size_t image_rank = gram_rank(cd.image2(), cd.h2().gram);
  r.row("duality.complement", "ker(J*)=H2-closure(D)^perp",
        std::abs(double(ker.cols + image_rank) - double(cd.h2().dim)), 0.5);

  const PartialIsometry pi = partial_isometry_k(cd);
  r.row("duality.range-projection", "K*K=P_ran", pi.projection_residual,
        tolv(job, "isometry", 1e-10));
  r.row("duality.norm-transport", "<K phi;JJ* K phi>_2=|phi|_2^2", pi.m1_residual,
        tolv(job, "isometry_m1", 1e-9));

  if (net) {
    const DenseMatrix lap = laplacian_dense(*net);
    r.row("duality.laplacian", "Delta=graph laplacian", frobenius(sub(dr.delta.matrix, lap)),
          tolv(job, "laplacian", 1e-9));
  }

  MatrixCsv csv;
  csv.add(dr.delta.matrix);
  r.file("duality_delta.csv", csv.out.str());
}

inline void spectra_battery(Runner& r, const CommonDomain& cd) {
  const JobSpec& job = r.job();
  const DualityResult dr = duality_operator(cd);
  std::ostringstream data;
  data << "phi,lambda,mass\n";
  double mass_resid = 0.0, moment_resid = 0.0;
  const std::size_t count = std::min<std::size_t>(cd.h1().dim, 64);
  for (std::size_t i = 0; i < count; ++i) {
    const std::vector<double> phi = basis_vector(cd.h1().dim, i);
    const SpectralMeasure mu = spectral_measure(dr.delta, phi);
    for (const auto& atom : mu.atoms)
      data << i << "," << fmt_sci(atom.lambda) << "," << fmt_sci(atom.mass) << "\n";
    const double mass = inner(cd.h1(), phi, phi);
    const double moment = inner(cd.h1(), phi, matvec(dr.delta, phi));
    mass_resid = std::max(mass_resid, std::abs(mu.total_mass() - mass) / std::max(1.0, mass));
    moment_resid = std::max(moment_resid,
                            std::abs(mu.first_moment() - moment) / std::max(1.0, std::abs(moment)));
  }
  r.row("spectra.mass", "mu([0;inf))=|phi|_1^2", mass_resid, tolv(job, "moments", 1e-9));
  r.row("spectra.moment", "int lambda dmu=|phi|_2^2", moment_resid, tolv(job, "moments", 1e-9));
  r.file("spectra.csv", data.str());
}

inline void dipole_battery(Runner& r, const Network& n) {
  const JobSpec& job = r.job();
  std::mt19937 rng(job.seed);
  std::ostringstream data;
  data << "x,vertex,value\n";
  double reproduce = 0.0, delta_resid = 0.0;
  for (std::size_t x = 0; x < n.vertices.size(); ++x) {
    if (x == n.base) continue;
    const std::vector<double> vx = dipole(n, n.vertices[x]);
    for (std::size_t i = 0; i < vx.size(); ++i)
      data << n.vertices[x] << "," << n.vertices[i] << "," << fmt_sci(vx[i]) << "\n";
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      std::vector<double> f(n.vertices.size());
      for (double& v : f) v = d(rng);
      const double lhs = energy_inner(n, vx, f);
      const double rhs = f[x] - f[n.base];
      reproduce = std::max(reproduce, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    delta_resid = std::max(delta_resid, delta_identity_residual(n, n.vertices[x]));
  }
  r.file("dipoles.csv", data.str());
  r.row("dipole.reproducing", "f(x)-f(o)=<v_x;f>_E", reproduce, tolv(job, "dipole", 1e-9));
  r.row("dipole.delta-identity", "delta_x=c(x)v_x-sum c_xy v_y", delta_resid,
        tolv(job, "dipole", 1e-9));

  std::uniform_int_distribution<std::size_t> pick(0, n.vertices.size() - 1);
  std::size_t probe = pick(rng);
  if (probe == n.base) probe = (probe + 1) % n.vertices.size();
  const Sqrt2Report s2 = sqrt2_bound_check(n, n.vertices[probe], 1000, job.seed + 1);
  r.row("dipole.sqrt2-bound", "|<phi;v_x>_E|<=sqrt2 |phi|_l2",
        std::max(0.0, s2.max_ratio - std::sqrt(2.0)), tolv(job, "sqrt2", 1e-9));
  r.row("dipole.sqrt2-attained", "phi=delta_x-delta_o attains sqrt2",
        std::abs(s2.attained_ratio - std::sqrt(2.0)), tolv(job, "sqrt2", 1e-9));

  const KlPair klp = kl_pair(n);
  r.row("dipole.pair", "<K phi;h>_E=<phi;L h>_l2", klp.pair.compatibility_residual,
        tolv(job, "pair", 1e-10));
  r.row("dipole.point-table", "<K delta_x;v_y>_E=delta_xy-delta_xo", klp.s14_residual,
        tolv(job, "pair", 1e-9));
  double kl4 = 0.0;
  const DenseMatrix gram = mul(transpose(klp.l), klp.l);
  for (std::size_t i = 0; i < gram.rows; ++i)
    for (std::size_t j = 0; j < gram.cols; ++j)
      kl4 = std::max(kl4, std::abs(gram(i, j) - (i == j ? 2.0 : 1.0)));
  r.row("dipole.dipole-gram", "<Lv_y;Lv_x>=delta_xy+1", kl4, tolv(job, "pair", 1e-10));
}

inline void defect_battery(Runner& r) {
  const JobSpec& job = r.job();
  const DefectModel model = interval_defect_model(256, 0.0, 1.0);
  r.row("defect.dimension", "dim N=2", std::abs(double(model.dim) - 2.0), 0.5);
  const double g11 = (std::exp(2.0) - 1.0) / 2.0;
  const double g22 = (1.0 - std::exp(-2.0)) / 2.0;
  const double gtol = tolv(job, "interval_gram", 1e-6);
  r.row("defect.gram-11", "int e^{2x}=(e^2-1)/2", std::abs(model.gram(0, 0) - g11) / g11, gtol);
  r.row("defect.gram-12", "int 1=1", std::abs(model.gram(0, 1) - 1.0), gtol);
  r.row("defect.gram-22", "int e^{-2x}=(1-e^{-2})/2", std::abs(model.gram(1, 1) - g22) / g22,
        gtol);
  r.row("defect.assembly", "second difference acts as identity", model.assembly_residual,
        tolv(job, "assembly", 1e-3));

  const DeficiencyCheck iso = deficiency_isomorphisms(model);
  r.row("defect.minus-eigenvector", "L*[h;iB*h]=-i[h;iB*h]", iso.max_minus_residual,
        tolv(job, "deficiency", 1e-9));
  r.row("defect.plus-eigenvector", "L*[h;-iB*h]=+i[h;-iB*h]", iso.max_plus_residual,
        tolv(job, "deficiency", 1e-9));

  std::vector<double> radii;
  if (job.levels.empty())
    radii = {1, 2, 3, 4, 5, 6, 7, 8};
  else
    for (std::size_t l : job.levels) radii.push_back(double(l));
  const IntervalSweep sweep = interval_sweep(radii);
  r.row("defect.sweep-exclusion", "log-norm slope>0.1 on (-R;R)", double(sweep.surviving_dim),
        0.5);

  std::ostringstream gramcsv;
  gramcsv << "row,col,value\n";
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      gramcsv << i << "," << j << "," << fmt_sci(model.gram(i, j)) << "\n";
  r.file("defect_gram.csv", gramcsv.str());

  std::ostringstream sweepcsv;
  sweepcsv << "radius,norm_sq_exp_plus,norm_sq_exp_minus\n";
  for (std::size_t k = 0; k < sweep.radii.size(); ++k)
    sweepcsv << fmt_sci(sweep.radii[k]) << "," << fmt_sci(sweep.squared_norms[0][k]) << ","
             << fmt_sci(sweep.squared_norms[1][k]) << "\n";
  r.file("defect_sweep.csv", sweepcsv.str());
}

inline void exhaust_battery(Runner& r) {
  const JobSpec& job = r.job();
  FamilyKind kind;
  double ratio = 1.0;
  std::vector<std::size_t> levels = job.levels;
  std::string x = "0", y = "1";
  if (job.family == "path_n") {
    kind = FamilyKind::path;
    if (levels.empty()) levels = {8, 16, 32};
  } else if (job.family == "lattice2d_n") {
    kind = FamilyKind::lattice2d;
    if (levels.empty()) levels = {3, 4, 6};
    x = "0,0";
    y = "0,1";
  } else if (job.family.rfind("binary_tree", 0) == 0) {
    kind = FamilyKind::binary_tree;
    std::size_t depth = 8;
    const std::string spec = job.family;
    const auto c1 = spec.find(':');
    if (c1 != std::string::npos) {
      const auto c2 = spec.find(':', c1 + 1);
      depth = std::size_t(std::stoul(spec.substr(c1 + 1, c2 - c1 - 1)));
      if (c2 != std::string::npos) ratio = std::stod(spec.substr(c2 + 1));
    }
    if (levels.empty())
      for (std::size_t d = 4; d <= depth; ++d) levels.push_back(d);
  } else {
    fail(errc::parse_error, "unknown family '" + job.family + "'");
  }

  const ExhaustionFamily fam = make_family(kind, levels, ratio);
  const std::vector<LevelGap> gaps = exhaustion_harmonics(fam, x, y);

  std::ostringstream csv;
  csv << "level,r_free,r_wired,gap\n";
  double worst_rayleigh = 0.0;
  for (const LevelGap& g : gaps) {
    csv << g.param << "," << fmt_sci(g.r_free) << "," << fmt_sci(g.r_wired) << ","
        << fmt_sci(g.gap) << "\n";
    worst_rayleigh = std::max(worst_rayleigh, g.r_wired - g.r_free);
  }
  r.file("exhaust.csv", csv.str());
  r.row("exhaust.rayleigh", "wired<=free", worst_rayleigh, tolv(job, "rayleigh", 1e-12));
  if (kind == FamilyKind::path) {
    double max_gap = 0.0;
    for (const LevelGap& g : gaps) max_gap = std::max(max_gap, std::abs(g.gap));
    r.row("exhaust.recurrent-gap", "gap->0 on paths", max_gap, tolv(job, "path_gap", 1e-9));
  }
  if (kind == FamilyKind::binary_tree) {
    double worst_increase = 0.0;
    double min_gap = 1e300;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      min_gap = std::min(min_gap, gaps[i].gap);
      if (i > 0) worst_increase = std::max(worst_increase, gaps[i].gap - gaps[i - 1].gap);
    }
    r.row("exhaust.transient-gap", "gap stays positive", min_gap > 0 ? 0.0 : 1.0, 0.5);
    r.row("exhaust.gap-monotone", "gap non-increasing", worst_increase,
          tolv(job, "gap_drift", 1e-9));
  }
}

inline void verify_all_battery(Runner& r, const Network& n) {
  const JobSpec& job = r.job();
  std::mt19937 rng(job.seed);

  // scalar anchor
  const WeightedSpace one = euclidean_space(1);
  const BlockProjection e2 = char_projection(OperatorBetween{DenseMatrix(1, 1, {2}), one, one});
  double anchor = std::abs(e2.e11(0, 0) - 0.2);
  anchor = std::max(anchor, std::abs(e2.e12(0, 0) - 0.4));
  anchor = std::max(anchor, std::abs(e2.e21(0, 0) - 0.4));
  anchor = std::max(anchor, std::abs(e2.e22(0, 0) - 0.8));
  r.row("charproj.scalar-anchor", "E(2)=[[1;2];[2;4]]/5", anchor, tolv(job, "anchor", 1e-14));

  // seeded projection suite
  double idem = 0.0, sa = 0.0, stone_max = 0.0, schur_max = 0.0, invol = 0.0, graph_max = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const OperatorBetween t = runner_injective_operator(rng, 8);
    const BlockProjection e = char_projection(t);
    idem = std::max(idem, e.idempotent_residual());
    sa = std::max(sa, e.selfadjoint_residual());
    stone_max = std::max(stone_max, stone_identities(t, e).max_residual);
    const SchurComplements s = schur_complements(e);
    schur_max = std::max({schur_max, frobenius(s.over_e11), frobenius(s.over_e22)});
    invol = std::max(invol, frobenius(sub(adjoint(adjoint(t)).matrix, t.matrix)));
    graph_max = std::max(graph_max, adjoint_graph_check(t).max_residual);
  }
  r.row("charproj.idempotent", "E^2=E", idem, tolv(job, "projection", 1e-10));
  r.row("charproj.selfadjoint", "E=E*", sa, tolv(job, "projection", 1e-10));
  r.row("charproj.block-maps", "TE11=E21 and friends", stone_max, tolv(job, "stone", 1e-10));
  r.row("charproj.schur", "both complements vanish", schur_max, tolv(job, "schur", 1e-9));
  r.row("hilbert.involution", "T**=T", invol, tolv(job, "adjoint", 1e-12));
  r.row("hilbert.adjoint-graph", "graph(T*)=(V graph(T))^perp", graph_max,
        tolv(job, "adjoint", 1e-9));

  // network battery
  const NetworkDuality nd = network_duality(n);
  r.row("duality.identity", "<phi;Delta phi>_1=|phi|_2^2", nd.t3_residual, tolv(job, "t3", 1e-10));
  r.row("duality.laplacian", "Delta=graph laplacian", nd.laplacian_residual,
        tolv(job, "laplacian", 1e-9));

  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double mass_resid = 0.0, moment_resid = 0.0;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> phi(n.vertices.size());
    for (double& v : phi) v = d(rng);
    const SpectralMeasure mu = spectral_measure(nd.delta, phi);
    const double mass = dot(phi, phi);
    const double moment = energy_inner(n, phi, phi);
    mass_resid = std::max(mass_resid, std::abs(mu.total_mass() - mass) / std::max(1.0, mass));
    moment_resid =
        std::max(moment_resid, std::abs(mu.first_moment() - moment) / std::max(1.0, moment));
  }
  r.row("spectra.mass", "mu([0;inf))=|phi|_1^2", mass_resid, tolv(job, "moments", 1e-9));
  r.row("spectra.moment", "int lambda dmu=|phi|_2^2", moment_resid, tolv(job, "moments", 1e-9));

  dipole_battery(r, n);

  const BigLReport bl = big_l_selfadjointness_probe(n);
  r.row("sympair.network-indices", "no spectrum near -1",
        bl.indices == std::make_pair(std::size_t{0}, std::size_t{0}) ? 0.0 : 1.0, 0.5);

  // discrete dichotomy, seeded
  std::uniform_int_distribution<int> nz(0, 2);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  int mismatches = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t pts = 2 + rng() % 4;
    std::vector<std::string> labels;
    std::vector<double> w1, w2;
    for (std::size_t i = 0; i < pts; ++i) {
      labels.push_back("p" + std::to_string(i));
      w1.push_back(nz(rng) == 0 ? 0.0 : w(rng));
      w2.push_back(nz(rng) == 0 ? 0.0 : w(rng));
    }
    if (std::count(w1.begin(), w1.end(), 0.0) == long(pts)) w1[0] = 1.0;
    if (std::count(w2.begin(), w2.end(), 0.0) == long(pts)) w2[1 % pts] = 1.0;
    const DiscreteMeasureSpace mu1 = make_discrete_measure(labels, w1);
    const DiscreteMeasureSpace mu2 = make_discrete_measure(labels, w2);
    const CommonDomain cd = measure_pair_domain(mu1, mu2);
    bool contained = true;
    for (std::size_t i : mu2.support) {
      bool found = false;
      for (std::size_t j : mu1.support) found = found || i == j;
      contained = contained && found;
    }
    const bool dual_dense = dual_domain(cd).cols == cd.h2().dim;
    bool ok = dual_dense == contained;
    try {
      duality_operator(cd);
      ok = ok && contained;
    } catch (const Error& err) {
      ok = ok && !contained && err.code() == errc::inclusion_ill_defined;
    }
    if (!ok) ++mismatches;
  }
  r.row("duality.dichotomy", "D* dense iff supp(mu2) in supp(mu1)", double(mismatches), 0.5);

  // friedrichs + krein, seeded
  double fr_resid = 0.0;
  int krein_failures = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t dim = 1 + rng() % 6;
    const WeightedSpace h = runner_random_space(rng, dim);
    const DenseMatrix b = runner_random_matrix(rng, dim, dim);
    const DenseMatrix a = add(DenseMatrix::identity(dim),
                              cholesky_solve_matrix(cholesky_spd(h.gram), mul(transpose(b), b)));
    const DomainOperator dop = full_domain_operator(h, a);
    const FriedrichsResult fr = friedrichs_extension(dop);
    fr_resid = std::max(fr_resid, fr.pointwise_agreement);
    if (!krein_membership(dop, fr.jj_star).member) ++krein_failures;
  }
  r.row("duality.friedrichs", "(JJ*)^-1=A on dom(A)", fr_resid, tolv(job, "friedrichs", 1e-9));
  r.row("duality.krein-witness", "JJ* in the contraction set", double(krein_failures), 0.5);

  defect_battery(r);
}

}  // namespace detail

/// Executes one job: parses the input, runs the command's verification
/// battery, writes report.csv plus the command's data files.
/// Exit status: 0 all rows pass, 1 some row failed, 2 parse error,
/// 3 any other module error (name on stderr).
inline int run(const JobSpec& job, std::ostream& log = std::cout) {
  try {
    Runner r(job);
    if (job.command == "charproj") {
      const DenseMatrix m = parse_matrix_file(job.input_path);
      const OperatorBetween t{m, euclidean_space(m.cols, "H1"), euclidean_space(m.rows, "H2")};
      detail::charproj_battery(r, t, "charproj");
    } else if (job.command == "duality") {
      Network net;
      const bool is_net = detail::sniff_first_token(job.input_path) == "network";
      const CommonDomain cd = detail::load_common_domain(job.input_path, &net);
      detail::duality_battery(r, cd, is_net ? &net : nullptr);
    } else if (job.command == "spectra") {
      const CommonDomain cd = detail::load_common_domain(job.input_path, nullptr);
      detail::spectra_battery(r, cd);
    } else if (job.command == "dipole") {
      detail::dipole_battery(r, parse_network_file(job.input_path));
    } else if (job.command == "defect") {
      detail::defect_battery(r);
    } else if (job.command == "exhaust") {
      detail::exhaust_battery(r);
    } else if (job.command == "verify-all") {
      detail::verify_all_battery(r, parse_network_file(job.input_path));
    } else {
      fail(errc::parse_error, "unknown command '" + job.command + "'");
    }

    r.write();
    std::size_t passed = 0;
    for (const auto& row : r.rows())
      if (row.pass) ++passed;
    for (const auto& row : r.rows())
      log << (row.pass ? "pass " : "FAIL ") << row.identity << "  [" << row.anchor
          << "]  residual=" << fmt_sci(row.residual) << " tol=" << fmt_sci(row.tolerance) << "\n";
    log << passed << "/" << r.rows().size() << " identities passed; report at " << job.output_dir
        << "/report.csv\n";
    return r.all_pass() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == errc::parse_error ? 2 : 3;
  }
}

}  // namespace opdual
