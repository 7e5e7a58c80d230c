#pragma once

#include <string>
#include <vector>

#include "traceopt/basis.hpp"
#include "traceopt/conic.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/rational.hpp"
#include "traceopt/trace_poly.hpp"

namespace traceopt {

/// Which norm-bound constraints the relaxation carries for untagged
/// variables: one pure-trace localizer per power k <= d, or a single
/// word-indexed localizer for N - x_j^2.
enum class BoundednessMode { per_k, single };

std::string to_string(BoundednessMode m);

struct RelaxationOptions {
    BoundednessMode boundedness = BoundednessMode::per_k;
    /// Norm-bound localizers can be dropped entirely (they are always dropped
    /// for variables with a projection/involution tag, whose norm is fixed).
    bool include_boundedness = true;
    std::size_t basis_cap = kDefaultBasisCap;
};

/// Bookkeeping for one PSD block of the assembled problem, enough to map a
/// dual Gram matrix back to weighted-sum-of-squares certificate terms.
struct BlockInfo {
    enum class Kind {
        moment,           ///< Hankel block: entry (u,v) = L(Tr(u* v))
        pure_localizer,   ///< entry (u,v) = L(u v s), s and basis pure
        trace_localizer,  ///< entry (u,v) = L(Tr(u* s v)), word-indexed basis
        bound_pure,       ///< pure localizer with s = N^k - Tr(x_j^{2k})
        bound_trace,      ///< trace localizer with s = N - x_j^2
    };
    Kind kind = Kind::moment;
    std::string name;
    std::vector<TraceMonomial> row_basis;
    TracePoly<Rational> multiplier; ///< s above; the constant 1 for moment blocks
    int constraint_index = -1;      ///< index into spec.constraints, or -1
    int variable = 0;               ///< bound blocks: the variable j
    int power = 0;                  ///< bound_pure blocks: the power k
};

/// The moment relaxation of one order, ready for the conic solver. Decision
/// variables are the trace classes of pure monomials up to degree 2d
/// (`dictionary`), with class 0 the constant pinned to 1 by the first
/// equality row. The conic objective is stated as a minimization; for
/// maximization problems the coefficients are negated and `negated` is set.
struct AssembledRelaxation {
    ProblemSpec spec;
    int d = 0;
    RelaxationOptions options;
    RuleSet rules;
    MomentBasis dictionary;
    std::vector<BlockInfo> info; // parallel to conic.blocks
    ConicProblem conic;
    bool negated = false;

    /// Converts an internal (minimization) objective value back to the
    /// problem's stated sense.
    double reported_value(double internal) const { return negated ? -internal : internal; }
};

/// Builds the relaxation whose localizing blocks are indexed by pure
/// monomials; requires every inequality/equality polynomial to be pure.
AssembledRelaxation build_pure_relaxation(const ProblemSpec& spec, int d,
                                          const RelaxationOptions& options = {});

/// Builds the relaxation with word-indexed (trace) localizing blocks, valid
/// for arbitrary symmetric constraint polynomials.
AssembledRelaxation build_general_relaxation(const ProblemSpec& spec, int d,
                                             const RelaxationOptions& options = {});

/// Moment vector of the evaluation functional f -> Tr f(A) over a pure
/// dictionary: the feasible point of the relaxation realized by the tuple A.
template <class K>
std::vector<K> evaluation_functional(const std::vector<DenseMat<K>>& A, const MomentBasis& dictionary) {
    std::vector<K> out;
    out.reserve(std::size_t(dictionary.size()));
    for (const TraceMonomial& m : dictionary.entries)
        out.push_back(evaluate_pure<K>(TracePoly<Rational>::from_monomial(m, 1), A));
    return out;
}

/// Internal-form objective value c . y of a moment vector.
double internal_objective(const AssembledRelaxation& relax, const std::vector<double>& y);

} // namespace traceopt
