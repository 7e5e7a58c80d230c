#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "traceopt/conic.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/rational.hpp"
#include "traceopt/relaxation.hpp"
#include "traceopt/trace_poly.hpp"

namespace traceopt {

/// Shape of one weighted term of a positivity certificate.
enum class TermKind {
    hermitian_square, ///< Tr(g* g): from the moment block
    pure_square,      ///< g^2 s with g and s pure: from a pure localizer
    bound_square,     ///< g^2 (N^k - Tr(x_j^{2k})): from a norm-bound localizer
    trace_square,     ///< Tr(g* s g): from a word-indexed localizer
    equality_row,     ///< signed multiple of an equality-constraint row
};

std::string to_string(TermKind k);

template <class K>
struct CertTerm {
    TermKind kind = TermKind::hermitian_square;
    K weight{};                     ///< nonnegative except for equality_row
    TracePoly<K> g;                 ///< the vector polynomial (the row itself for equality_row)
    TracePoly<Rational> multiplier; ///< s; the constant 1 when the shape has none
    int constraint_index = -1;
    int variable = 0; ///< bound shapes: j
    int power = 0;    ///< bound_square: k
};

/// Weighted-sum-of-squares membership data certifying
///   objective - bound = sum of terms   (modulo the rewrite rules),
/// where `objective` is the internal minimization objective: the problem's
/// objective, negated when `negated` is set (maximization).
template <class K>
struct Certificate {
    ProblemSpec spec;
    int d = 0;
    bool negated = false;
    K bound{};
    std::vector<CertTerm<K>> terms;

    /// Bound in the problem's stated sense: lower bound for minimization,
    /// upper bound (sign-flipped) for maximization.
    K reported_bound() const { return negated ? K(-bound) : bound; }
};

struct CertificateSettings {
    double clip_tol = 1e-7; ///< eigenvalues in [-100*clip_tol, 0] are dropped; below that, error
    unsigned long denom_bound = 1000000; ///< rationalization denominator cap
};

/// Reads the dual Gram matrices of an optimal solve into certificate terms:
/// one term per kept (positive) eigenvalue per block, plus one signed row
/// term per active equality other than the normalization. Throws
/// NumericalError when a Gram block is indefinite beyond tolerance.
Certificate<double> extract_certificate(const AssembledRelaxation& relax, const SolveResult& result,
                                        const CertificateSettings& settings = {});

/// Exact-rational counterpart: Gram entries are rationalized with bounded
/// denominators and re-projected onto the PSD cone by exact pivoted
/// symmetric elimination that keeps only positive pivots.
Certificate<Rational> rationalize_certificate(const AssembledRelaxation& relax, const SolveResult& result,
                                              const CertificateSettings& settings = {});

namespace detail {
double coeff_abs(double x);
Rational coeff_abs(const Rational& x);
} // namespace detail

/// Expands every term, reduces modulo the rewrite rules, and returns the
/// largest absolute coefficient of
///   objective - bound - sum(terms).
template <class K>
K verify_certificate(const Certificate<K>& cert) {
    RuleSet rules = compile_rules(cert.spec);
    TracePoly<K> expansion = TracePoly<K>::constant(cert.bound);
    for (const CertTerm<K>& t : cert.terms) {
        TracePoly<K> s = t.multiplier.template map_coefficients<K>();
        switch (t.kind) {
            case TermKind::hermitian_square:
                expansion += (t.g.involution() * t.g).universal_trace().scaled(t.weight);
                break;
            case TermKind::pure_square:
            case TermKind::bound_square:
                expansion += (t.g * t.g * s).scaled(t.weight);
                break;
            case TermKind::trace_square:
                expansion += (t.g.involution() * s * t.g).universal_trace().scaled(t.weight);
                break;
            case TermKind::equality_row:
                expansion += t.g.scaled(t.weight);
                break;
        }
    }
    TracePoly<K> objective = cert.spec.objective.template map_coefficients<K>();
    if (cert.negated) objective = -objective;
    TracePoly<K> residual = (objective - expansion).reduced(rules);
    K worst{};
    for (const auto& [m, c] : residual.terms()) {
        K a = detail::coeff_abs(c);
        if (worst < a) worst = a;
    }
    return worst;
}

/// Text proof format: header lines, then one block per term. Round-trips
/// through read_certificate via the expression printer/parser.
void write_certificate(std::ostream& os, const Certificate<double>& cert);
void write_certificate(std::ostream& os, const Certificate<Rational>& cert);

/// Parses a proof file (either flavor) into exact form; decimal literals
/// become exact rationals.
Certificate<Rational> read_certificate(std::istream& is);

/// Float view of an exact certificate.
Certificate<double> certificate_to_double(const Certificate<Rational>& cert);

/// The univariate split of the identity function on [0, 1]: t = s1 - s2 with
///   s2 = (eps/2) (t - 1)^{2n},  s1 = s2 + t,  n = ceil(1/eps),
/// where s1 is strictly positive on the real line and s2 <= eps/2 on [0, 1].
/// `sos` holds a numeric two-square decomposition s1 = p^2 + q^2.
struct UnivariateSplit {
    Rational eps;
    int n = 0;
    std::vector<Rational> s1; ///< coefficients, ascending degree
    std::vector<Rational> s2;
    std::vector<std::vector<double>> sos; ///< two polynomials, ascending degree
};

UnivariateSplit univariate_split(const Rational& eps);

/// Evaluates a coefficient list at a rational point.
Rational eval_poly(const std::vector<Rational>& coeffs, const Rational& t);

/// Substitutes a trace polynomial into a univariate coefficient list.
TracePoly<Rational> substitute_poly(const std::vector<Rational>& coeffs, const TracePoly<Rational>& a);

/// One-sided operator-positivity check: minimizes eps - Tr(s2(a)) over the
/// word-indexed relaxation of the constraint set at order d; `positive` is
/// set when the solver proves that bound nonnegative. Inconclusive results
/// carry the (possibly negative) bound for diagnostics.
struct PositivityCheck {
    bool positive = false;
    SolveStatus status = SolveStatus::numerical_failure;
    double bound = 0.0;
    Rational eps;
    int order = 0;
    int objective_degree = 0;
};

PositivityCheck verify_operator_positivity(const TracePoly<Rational>& a, const ProblemSpec& spec, int d,
                                           const Rational& eps, const RelaxationOptions& options = {},
                                           const SolverSettings& solver = {});

} // namespace traceopt
