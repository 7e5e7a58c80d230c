#pragma once

#include <optional>
#include <string>
#include <vector>

#include "traceopt/rational.hpp"
#include "traceopt/rewrite.hpp"
#include "traceopt/trace_poly.hpp"

namespace traceopt {

enum class ConstraintKind {
    inequality,      // s >= 0 (symmetric trace polynomial)
    equality,        // s = 0
    projection_var,  // x_j^2 = x_j
    involution_var,  // x_j^2 = 1
};

struct Constraint {
    ConstraintKind kind = ConstraintKind::inequality;
    TracePoly<Rational> poly; // for inequality/equality
    int variable = 0;         // for projection_var/involution_var
};

enum class Sense { minimize, maximize };

/// Problem statement: optimize a pure trace polynomial objective over tuples
/// constrained by S together with the norm bound ||x_j|| <= sqrt(N).
struct ProblemSpec {
    int n = 0;
    TracePoly<Rational> objective;
    std::vector<Constraint> constraints;
    Rational N = 1;
    Sense sense = Sense::minimize;
    std::string name;

    void validate() const; // throws InputError on inconsistent data
};

/// Rewrite rules from projection/involution tags, plus equality constraints
/// that match the patterns +/-(x_j^2 - x_j) or +/-(x_j^2 - 1).
RuleSet compile_rules(const ProblemSpec& spec);

/// Equality constraints not expressible as rewrite rules.
std::vector<const Constraint*> residual_equalities(const ProblemSpec& spec);

/// Inequality constraints.
std::vector<const Constraint*> inequality_constraints(const ProblemSpec& spec);

/// Smallest admissible relaxation order: max of ceil(deg/2) over the
/// objective, the inequality constraints, and (when any variable is unruled)
/// the first norm-bound localizer N - x_j^2.
int minimal_order(const ProblemSpec& spec);

/// Built-in example problems; ids: toy, bell-quadratic, bell-covariance,
/// bell-bilocal.
ProblemSpec builtin_problem(const std::string& id);
std::vector<std::string> builtin_problem_ids();

/// The explicit 2x2 projection triple whose objective value certifies the toy
/// problem's exact optimum; entries lie in Q(sqrt(15)).
std::vector<DenseMat<QuadExt<15>>> toy_optimal_projections();

} // namespace traceopt
