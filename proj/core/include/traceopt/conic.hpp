#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace traceopt {

/// One coefficient of a block's affine map: position (row, col) with
/// row <= col; `var` is a 0-based decision-variable index, or -1 for the
/// constant part. The matrix is symmetric, so the mirrored position is
/// implied.
struct BlockEntry {
    int row = 0;
    int col = 0;
    int var = -1;
    double coeff = 0.0;
};

struct Block {
    int size = 0;
    std::vector<BlockEntry> entries;
    std::string name; // bookkeeping label, not used by the solver
};

/// One linear equality sum_k coeffs[k].second * y[coeffs[k].first] = rhs.
struct LinearEq {
    std::vector<std::pair<int, double>> coeffs;
    double rhs = 0.0;
};

/// Linear conic problem in dual standard form:
///   minimize    c . y
///   subject to  S_b(y) = F0_b + sum_k y_k F_{k,b}  is PSD for every block b,
///               A y = b_eq.
struct ConicProblem {
    int m = 0;                      // number of scalar decision variables
    std::vector<double> c;          // objective, length m
    std::vector<Block> blocks;
    std::vector<LinearEq> equalities;

    void validate() const; // throws InputError on malformed data
};

enum class SolveStatus {
    optimal,
    infeasible_certificate,
    unbounded_certificate,
    max_iter,
    numerical_failure,
};

std::string to_string(SolveStatus s);

/// Per-iteration trace of the interior-point run. `gap_correction` bounds the
/// weak-duality violation attributable to primal/dual infeasibility of the
/// iterate: dual_obj - primal_obj <= gap_correction holds exactly at every
/// iterate, and the correction vanishes as residuals go to zero.
struct IterateInfo {
    int iter = 0;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double mu = 0.0;
    double res_primal = 0.0;
    double res_dual = 0.0;
    double res_eq = 0.0;
    double gap_correction = 0.0;
    double step_primal = 0.0;
    double step_dual = 0.0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    std::vector<double> y;              // decision variables
    std::vector<Eigen::MatrixXd> S;     // primal slack blocks
    std::vector<Eigen::MatrixXd> Z;     // dual (Gram) blocks
    std::vector<double> eq_duals;       // multipliers of the equality rows
    int iterations = 0;
    double res_primal = 0.0;
    double res_dual = 0.0;
    double res_gap = 0.0;
    std::vector<IterateInfo> history;
    std::string message;

    bool ok() const { return status == SolveStatus::optimal; }
};

struct SolverSettings {
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;
    int max_iter = 200;
    bool verbose = false;
    bool record_history = true;
};

/// Bundled dense primal-dual interior-point solver (infeasible start,
/// predictor-corrector). Deterministic for fixed input and settings.
SolveResult solve(const ConicProblem& p, const SolverSettings& settings = {});

/// Evaluates one block's affine map at y: F0_b + sum_k y_k F_{k,b}.
Eigen::MatrixXd block_matrix(const ConicProblem& p, int block_index, const std::vector<double>& y);

} // namespace traceopt
