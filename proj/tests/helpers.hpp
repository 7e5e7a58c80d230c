#pragma once

// Shared test utilities: deterministic random matrix tuples (symmetric
// contractions and orthogonal projections) plus small conversions between
// Eigen and the library's DenseMat.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "traceopt/problem.hpp"
#include "traceopt/rational.hpp"

namespace testutil {

inline Eigen::MatrixXd random_gaussian(int k, std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = gauss(rng);
    return g;
}

/// Random symmetric matrix rescaled to spectral norm <= scale.
inline Eigen::MatrixXd random_contraction(int k, std::mt19937& rng, double scale = 1.0) {
    Eigen::MatrixXd g = random_gaussian(k, rng);
    Eigen::MatrixXd s = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    double nrm = es.eigenvalues().cwiseAbs().maxCoeff();
    if (nrm > 1e-12) s *= (scale / nrm) * 0.999;
    return s;
}

/// Random orthogonal projection: spectral projector of a random symmetric
/// matrix onto its positive eigenspace (may be 0 or I in degenerate draws).
inline Eigen::MatrixXd random_projection(int k, std::mt19937& rng) {
    Eigen::MatrixXd s = 0.5 * (random_gaussian(k, rng) + random_gaussian(k, rng).transpose());
    s = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i)
        if (es.eigenvalues()(i) > 0) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
    return 0.5 * (p + p.transpose());
}

inline traceopt::DenseMat<double> to_dense(const Eigen::MatrixXd& m) {
    traceopt::DenseMat<double> d(int(m.rows()), int(m.cols()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) d.at(i, j) = m(i, j);
    return d;
}

inline std::vector<traceopt::DenseMat<double>> to_dense_tuple(const std::vector<Eigen::MatrixXd>& ms) {
    std::vector<traceopt::DenseMat<double>> out;
    out.reserve(ms.size());
    for (const auto& m : ms) out.push_back(to_dense(m));
    return out;
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

/// minimize Tr(x1) over one variable with no constraints beyond the norm
/// bound ||x1|| <= 1; the optimum is -1 at x1 = -I.
inline traceopt::ProblemSpec contraction_spec() {
    traceopt::ProblemSpec spec;
    spec.n = 1;
    spec.objective = traceopt::TracePoly<traceopt::Rational>::trace_word({1});
    spec.sense = traceopt::Sense::minimize;
    spec.name = "contraction";
    return spec;
}

} // namespace testutil
