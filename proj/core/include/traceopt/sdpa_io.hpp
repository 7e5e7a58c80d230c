#pragma once

#include <iosfwd>
#include <string>

#include "traceopt/conic.hpp"

namespace traceopt {

/// Serializes the problem in SDPA sparse format (.dat-s):
///   minimize c . y  subject to  sum_k y_k F_k - F0  PSD.
/// PSD blocks are written as given; linear equalities are encoded as a final
/// diagonal block holding +/-(a.y - b) pairs, announced by a leading comment
/// line `*EQ <count>` so the reader can reconstruct them. Output bytes are
/// deterministic; values use enough digits to round-trip doubles exactly.
std::string export_sdpa(const ConicProblem& p);

void export_sdpa(const ConicProblem& p, std::ostream& out);

/// Parses SDPA sparse input produced by export_sdpa or by other tools.
/// Recognizes the `*EQ` convention; otherwise diagonal blocks stay blocks.
ConicProblem import_sdpa(std::istream& in);
ConicProblem import_sdpa_string(const std::string& text);

} // namespace traceopt
