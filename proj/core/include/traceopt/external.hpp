#pragma once

#include <string>

#include "traceopt/conic.hpp"

namespace traceopt {

/// Solves the problem with an external backend, currently "cvxopt" via a
/// Python bridge script. The problem is exported to SDPA sparse format, the
/// bridge is invoked as a subprocess, and its JSON answer is mapped onto the
/// same SolveResult schema as the bundled solver. Throws ConfigError when the
/// backend or its bridge cannot be found.
SolveResult solve_external(const ConicProblem& p, const std::string& solver_id,
                           const SolverSettings& settings = {});

/// Maps an external status string onto SolveStatus; covers every status the
/// cvxopt backend can produce and falls back to numerical_failure.
SolveStatus map_external_status(const std::string& status);

/// Resolution order for the bridge script: TRACEOPT_CVXOPT_BRIDGE environment
/// variable, the executable's directory, `../share/traceopt` relative to the
/// executable, then `./tools`. Returns an empty string when not found.
std::string find_cvxopt_bridge();

} // namespace traceopt
