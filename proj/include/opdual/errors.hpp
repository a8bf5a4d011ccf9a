#pragma once

#include <stdexcept>
#include <string>

namespace opdual {

enum class errc {
  none,
  not_spd,
  not_selfadjoint,
  no_convergence,
  inconsistent_rhs,
  not_dense,
  inclusion_ill_defined,
  not_a_graph,
  singular_block,
  not_unitary,
  not_intertwining,
  not_semibounded,
  pair_incompatible,
  grid_too_coarse,
  q_not_admissible,
  decomposition_mismatch,
  singular_c12,
  parse_error,
  not_connected,
  nonpositive_conductance,
  vertex_missing,
  same_as_base,
  invalid,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::none: return "None";
    case errc::not_spd: return "NotSPD";
    case errc::not_selfadjoint: return "NotSelfadjoint";
    case errc::no_convergence: return "NoConvergence";
    case errc::inconsistent_rhs: return "InconsistentRHS";
    case errc::not_dense: return "NotDense";
    case errc::inclusion_ill_defined: return "InclusionIllDefined";
    case errc::not_a_graph: return "NotAGraph";
    case errc::singular_block: return "SingularBlock";
    case errc::not_unitary: return "NotUnitary";
    case errc::not_intertwining: return "NotIntertwining";
    case errc::not_semibounded: return "NotSemibounded";
    case errc::pair_incompatible: return "PairIncompatible";
    case errc::grid_too_coarse: return "GridTooCoarse";
    case errc::q_not_admissible: return "QNotAdmissible";
    case errc::decomposition_mismatch: return "DecompositionMismatch";
    case errc::singular_c12: return "SingularC12";
    case errc::parse_error: return "ParseError";
    case errc::not_connected: return "NotConnected";
    case errc::nonpositive_conductance: return "NonpositiveConductance";
    case errc::vertex_missing: return "VertexMissing";
    case errc::same_as_base: return "SameAsBase";
    case errc::invalid: return "Invalid";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace opdual
