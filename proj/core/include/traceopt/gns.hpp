#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "traceopt/basis.hpp"
#include "traceopt/conic.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/relaxation.hpp"

namespace traceopt {

/// A tracial linear functional known on all pure trace classes up to degree
/// 2*order, i.e. enough to fill the Hankel matrix of every order <= order.
struct MomentFunctional {
    int n = 0;
    int order = 0;
    RuleSet rules;
    MomentBasis dictionary; ///< pure classes up to degree 2*order
    MomentBasis word_basis; ///< all tracial words up to degree `order`
    std::vector<double> values;

    /// Value on a (not necessarily reduced) pure monomial.
    double value(const TraceMonomial& m) const;
    /// Value on a pure trace polynomial.
    double value(const TracePoly<Rational>& f) const;
    /// Hankel matrix of order k <= order; rows/cols follow word_basis, whose
    /// degree-<= k entries form a prefix.
    Eigen::MatrixXd hankel(int k) const;
};

/// Functional realized by the moment vector of a solved relaxation.
MomentFunctional functional_from_solution(const AssembledRelaxation& relax, const SolveResult& result);

/// Functional realized by evaluating f -> Tr f(A) at a matrix tuple.
MomentFunctional functional_from_evaluation(const std::vector<DenseMat<double>>& A, int n, int order,
                                            const RuleSet& rules);

struct FlatnessReport {
    bool flat = false;
    int rank_low = 0;  ///< numerical rank of the order-d Hankel matrix
    int rank_full = 0; ///< numerical rank of the order-(d+delta) matrix
    double sigma_max = 0.0;
    double threshold = 0.0;
};

/// Compares the numerical ranks of the order-d and order-(d+delta) Hankel
/// matrices; singular values below rank_tol * sigma_max count as zero.
FlatnessReport check_flatness(const MomentFunctional& L, int d, int delta, double rank_tol = 1e-6);

struct GnsSettings {
    double rank_tol = 1e-6;      ///< column selection and flatness threshold
    double asym_tol = 1e-6;      ///< allowed asymmetry of the operators before symmetrization
    double scalar_tol = 1e-5;    ///< per-component scalarity of pure-trace multiplication
    double cluster_gap = 1e-6;   ///< relative eigenvalue gap separating blocks
    double commutant_tol = 1e-8; ///< nullspace threshold for the commutant
    int max_retries = 5;         ///< random-element retries per split
};

struct MinimizerComponent {
    std::vector<Eigen::MatrixXd> matrices; ///< one symmetric matrix per variable
    double weight = 0.0;
};

struct Minimizer {
    std::vector<MinimizerComponent> components;
    int rank = 0; ///< dimension of the extracted representation
    bool flat = false;
    FlatnessReport flatness;
    std::string warning; ///< non-empty when extraction proceeded despite a borderline check
};

/// Simultaneous orthogonal block diagonalization of the algebra generated by
/// symmetric matrices: returns Q with Q^T A_i Q block diagonal on a common
/// partition (maximal up to random retries; a coarser partition on failure).
struct BlockDiagonalization {
    Eigen::MatrixXd Q;
    std::vector<int> block_sizes;
};

BlockDiagonalization block_diagonalize(const std::vector<Eigen::MatrixXd>& A, const GnsSettings& settings = {});

/// Minimizer extraction from a flat optimal functional: picks a column basis
/// of the order-(d+delta) Hankel matrix among degree-<= d words (the constant
/// word first), forms the multiplication operators by Cholesky conjugation,
/// block-diagonalizes, and reads one matrix tuple with weight per component.
/// Throws NumericalError when the principal submatrix is not positive
/// definite, the operators fail the symmetry guard, or multiplication by a
/// pure trace class is not scalar on some component (extraction
/// inapplicable).
Minimizer pure_trace_gns(const MomentFunctional& L, int d, int delta, const GnsSettings& settings = {});

struct MinimizerReport {
    double sum_weights = 0.0;
    double max_moment_residual = 0.0; ///< over all stored dictionary classes
    double constraint_floor = 0.0;    ///< most negative constraint eigenvalue (0 if none)
    double max_equality_residual = 0.0;
    double max_tag_residual = 0.0;    ///< violation of projection/involution tags
    double objective_mixture = 0.0;
    double objective_functional = 0.0;

    bool ok(double tol) const;
};

/// Checks a minimizer against the problem data and the functional it was
/// extracted from: weights sum to one, constraints hold per component, and
/// the weighted mixture reproduces the stored moments and objective.
MinimizerReport validate_minimizer(const Minimizer& m, const ProblemSpec& spec, const MomentFunctional& L);

/// JSON rendering of a minimizer (components with weights and row-major
/// matrices at full precision).
std::string minimizer_json(const Minimizer& m, int indent = 2);

} // namespace traceopt
