#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "opdual/errors.hpp"
#include "opdual/matrix.hpp"
#include "opdual/network.hpp"
#include "opdual/space.hpp"

namespace opdual {

namespace detail {

inline std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    fail(errc::parse_error, "bad number '" + s + "' at line " + std::to_string(line_no));
  }
}

// content lines with their 1-based numbers, comments and blanks removed
inline std::vector<std::pair<std::size_t, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.emplace_back(no, line);
  }
  return out;
}

}  // namespace detail

/// Line-oriented network format:
///   network <name>
///   base <vertex-label>
///   edge <u> <v> <conductance>   (one per line)
/// Comment lines start with '#'.
inline Network parse_network(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty()) fail(errc::parse_error, "empty network file");

  std::string name, base;
  std::vector<std::tuple<std::string, std::string, double>> edges;
  std::vector<std::string> vertices;
  auto note_vertex = [&](const std::string& v) {
    for (const auto& existing : vertices)
      if (existing == v) return;
    vertices.push_back(v);
  };

  bool saw_network = false, saw_base = false;
  for (const auto& [no, line] : lines) {
    const std::vector<std::string> tok = detail::tokens_of(line);
    if (tok[0] == "network") {
      if (tok.size() != 2 || saw_network)
        fail(errc::parse_error, "bad network header at line " + std::to_string(no));
      name = tok[1];
      saw_network = true;
    } else if (tok[0] == "base") {
      if (tok.size() != 2 || saw_base)
        fail(errc::parse_error, "bad base line at line " + std::to_string(no));
      base = tok[1];
      saw_base = true;
      note_vertex(base);
    } else if (tok[0] == "edge") {
      if (tok.size() != 4) fail(errc::parse_error, "bad edge at line " + std::to_string(no));
      const double c = detail::parse_double(tok[3], no);
      for (const auto& [u, v, cc] : edges)
        if ((u == tok[1] && v == tok[2]) || (u == tok[2] && v == tok[1]))
          fail(errc::parse_error, "duplicate edge at line " + std::to_string(no));
      note_vertex(tok[1]);
      note_vertex(tok[2]);
      edges.emplace_back(tok[1], tok[2], c);
    } else {
      fail(errc::parse_error, "unknown directive '" + tok[0] + "' at line " + std::to_string(no));
    }
  }
  if (!saw_network || !saw_base) fail(errc::parse_error, "network/base headers required");
  if (edges.empty()) fail(errc::parse_error, "network needs at least one edge");
  return make_network(name, std::move(vertices), std::move(edges), base);
}

inline Network parse_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
  return parse_network(in);
}

inline std::string emit_network(const Network& n) {
  std::ostringstream out;
  out << "network " << n.name << "\n";
  out << "base " << n.vertices[n.base] << "\n";
  char buf[64];
  for (const auto& e : n.edges) {
    std::snprintf(buf, sizeof buf, "%.17g", e.conductance);
    out << "edge " << n.vertices[e.u] << " " << n.vertices[e.v] << " " << buf << "\n";
  }
  return out.str();
}

namespace detail {

inline DenseMatrix parse_matrix_block(const std::vector<std::pair<std::size_t, std::string>>& lines,
                                      std::size_t& cursor, std::size_t rows, std::size_t cols) {
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (cursor >= lines.size()) fail(errc::parse_error, "matrix block truncated");
    const auto& [no, line] = lines[cursor++];
    const std::vector<std::string> tok = tokens_of(line);
    if (tok.size() != cols)
      fail(errc::parse_error, "expected " + std::to_string(cols) + " entries at line " +
                                  std::to_string(no));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_double(tok[c], no);
  }
  if (!m.finite()) fail(errc::parse_error, "nonfinite matrix entry");
  return m;
}

}  // namespace detail

/// `matrix <rows> <cols>` followed by the rows; `gram <dim>` is the square
/// header used for inner-product matrices.
inline DenseMatrix parse_matrix(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty()) fail(errc::parse_error, "empty matrix file");
  const std::vector<std::string> head = detail::tokens_of(lines[0].second);
  std::size_t cursor = 1;
  if (head[0] == "matrix" && head.size() == 3) {
    const auto rows = std::size_t(detail::parse_double(head[1], lines[0].first));
    const auto cols = std::size_t(detail::parse_double(head[2], lines[0].first));
    return detail::parse_matrix_block(lines, cursor, rows, cols);
  }
  if (head[0] == "gram" && head.size() == 2) {
    const auto dim = std::size_t(detail::parse_double(head[1], lines[0].first));
    return detail::parse_matrix_block(lines, cursor, dim, dim);
  }
  fail(errc::parse_error, "expected 'matrix <rows> <cols>' or 'gram <dim>' header");
}

inline DenseMatrix parse_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
  return parse_matrix(in);
}

/// CommonDomain file: a `pair` header, two gram blocks over shared
/// coordinates, and an optional `basis <rows> <cols>` block spanning D.
inline CommonDomain parse_pair(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty() || detail::tokens_of(lines[0].second)[0] != "pair")
    fail(errc::parse_error, "expected 'pair' header");
  std::size_t cursor = 1;

  auto read_gram = [&]() {
    if (cursor >= lines.size()) fail(errc::parse_error, "missing gram block");
    const auto& [no, line] = lines[cursor];
    const std::vector<std::string> tok = detail::tokens_of(line);
    if (tok.size() != 2 || tok[0] != "gram")
      fail(errc::parse_error, "expected 'gram <dim>' at line " + std::to_string(no));
    const auto dim = std::size_t(detail::parse_double(tok[1], no));
    ++cursor;
    return detail::parse_matrix_block(lines, cursor, dim, dim);
  };
  const DenseMatrix g1 = read_gram();
  const DenseMatrix g2 = read_gram();
  if (g1.rows != g2.rows)
    fail(errc::parse_error, "shared-coordinate grams must have equal dimension");

  DenseMatrix basis = DenseMatrix::identity(g1.rows);
  if (cursor < lines.size()) {
    const auto& [no, line] = lines[cursor];
    const std::vector<std::string> tok = detail::tokens_of(line);
    if (tok.size() != 3 || tok[0] != "basis")
      fail(errc::parse_error, "expected 'basis <rows> <cols>' at line " + std::to_string(no));
    const auto rows = std::size_t(detail::parse_double(tok[1], no));
    const auto cols = std::size_t(detail::parse_double(tok[2], no));
    if (rows != g1.rows) fail(errc::parse_error, "basis rows must match the gram dimension");
    ++cursor;
    basis = detail::parse_matrix_block(lines, cursor, rows, cols);
  }
  if (cursor != lines.size()) fail(errc::parse_error, "trailing content in pair file");

  const WeightedSpace h1 = make_weighted_space(g1, "H1");
  const WeightedSpace h2 = make_weighted_space(g2, "H2");
  const WeightedSpace ambient = euclidean_space(g1.rows, "ambient");
  return make_common_domain(basis, OperatorBetween{DenseMatrix::identity(g1.rows), ambient, h1},
                            OperatorBetween{DenseMatrix::identity(g2.rows), ambient, h2});
}

inline CommonDomain parse_pair_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
  return parse_pair(in);
}

/// One verification line of a run report.
struct ReportRow {
  std::string identity;
  std::string anchor;  // the identity in formula form
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline std::string fmt_sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

inline std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "identity,anchor,residual,tolerance,pass\n";
  for (const auto& r : rows)
    out << r.identity << "," << r.anchor << "," << fmt_sci(r.residual) << ","
        << fmt_sci(r.tolerance) << "," << (r.pass ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace opdual
