#pragma once

#include <iosfwd>
#include <string>

#include "traceopt/problem.hpp"
#include "traceopt/rational.hpp"
#include "traceopt/relaxation.hpp"
#include "traceopt/trace_poly.hpp"

namespace traceopt {

/// Parses a trace-polynomial expression over variables x1, x2, ...:
/// rational/decimal literals (including scientific notation), tr(...),
/// + - * / ^ and parentheses. tr of a general subexpression is expanded
/// linearly through the universal trace. When n_vars > 0, variable indices
/// outside 1..n_vars are rejected. The printer to_string() round-trips
/// through this parser.
TracePoly<Rational> parse_trace_poly(const std::string& text, int n_vars = 0);

/// Parses an expression that must reduce to a constant; returns its value.
Rational parse_scalar(const std::string& text);

/// A problem description file: spec plus optional run defaults.
struct ProblemFile {
    ProblemSpec spec;
    int order = 0; ///< suggested relaxation order; 0 when unspecified
    bool has_boundedness_mode = false;
    BoundednessMode boundedness = BoundednessMode::per_k;
};

/// Line-oriented problem format with '#' comments:
///   problem <name>
///   vars <n>
///   sense minimize|maximize
///   bound <scalar>
///   objective <expression>
///   constraint projection x<j> | involution x<j> | inequality <expression>
///              | equality <expression>
///   order <d>
///   option boundedness per-k|single
ProblemFile parse_problem_file(std::istream& is);
ProblemFile parse_problem_text(const std::string& text);

/// Renders a spec back into the problem file format (parses to an equal spec).
std::string problem_file_text(const ProblemSpec& spec, int order = 0);

} // namespace traceopt
