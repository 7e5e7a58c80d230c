#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "traceopt/gns.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/relaxation.hpp"

using namespace traceopt;

namespace {

ProblemSpec free_spec(int n) {
    ProblemSpec spec;
    spec.n = n;
    spec.objective = TracePoly<Rational>::trace_word({1});
    spec.name = "synthetic";
    return spec;
}

/// Tuple of block-diagonal matrices conjugated by a fixed orthogonal matrix,
/// with a 2x2 noncommuting pair in the first block and scalars in the second.
std::vector<Eigen::MatrixXd> hidden_two_block_tuple(Eigen::MatrixXd* q_out = nullptr) {
    Eigen::MatrixXd seed(3, 3);
    seed << 0.6, -1.2, 0.3, 0.8, 0.4, -0.7, -0.5, 0.9, 1.1;
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(seed).householderQ();
    if (q_out) *q_out = q;

    Eigen::MatrixXd b1(2, 2), b2(2, 2);
    b1 << 0.5, 0.2, 0.2, -0.4;
    b2 << -0.1, 0.3, 0.3, 0.6;
    std::vector<Eigen::MatrixXd> out;
    for (int i = 0; i < 2; ++i) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
        m.topLeftCorner(2, 2) = (i == 0) ? b1 : b2;
        m(2, 2) = (i == 0) ? 0.8 : -0.3;
        out.push_back(q.transpose() * m * q);
    }
    return out;
}

} // namespace

TEST_CASE("scalar tuple of ones extracts a single trivial component") {
    std::vector<DenseMat<double>> A(2, DenseMat<double>::identity(1));
    MomentFunctional L = functional_from_evaluation(A, 2, 2, RuleSet(2));

    CHECK(L.value(TraceMonomial::trace_of({1, 2})) == doctest::Approx(1.0));
    FlatnessReport flat = check_flatness(L, 1, 1);
    CHECK(flat.flat);
    CHECK(flat.rank_low == 1);
    CHECK(flat.rank_full == 1);

    Minimizer m = pure_trace_gns(L, 1, 1);
    REQUIRE(m.components.size() == 1);
    CHECK(m.rank == 1);
    CHECK(m.components[0].weight == doctest::Approx(1.0));
    REQUIRE(m.components[0].matrices.size() == 2);
    CHECK(m.components[0].matrices[0](0, 0) == doctest::Approx(1.0));

    MinimizerReport rep = validate_minimizer(m, free_spec(2), L);
    CHECK(rep.ok(1e-8));
    CHECK(std::abs(rep.sum_weights - 1.0) <= 1e-10);
}

TEST_CASE("diagonal matrix splits into weighted scalar atoms") {
    DenseMat<double> a(2, 2);
    a.at(0, 0) = 0.8;
    a.at(1, 1) = -0.5;
    MomentFunctional L = functional_from_evaluation({a}, 1, 2, RuleSet(1));

    Minimizer m = pure_trace_gns(L, 1, 1);
    REQUIRE(m.components.size() == 2);
    CHECK(m.flat);
    CHECK(m.rank == 2);

    std::vector<std::pair<double, double>> atoms; // (value, weight)
    for (const auto& c : m.components) {
        REQUIRE(c.matrices.size() == 1);
        REQUIRE(c.matrices[0].rows() == 1);
        atoms.push_back({c.matrices[0](0, 0), c.weight});
    }
    std::sort(atoms.begin(), atoms.end());
    CHECK(atoms[0].first == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(atoms[1].first == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(atoms[0].second == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(atoms[1].second == doctest::Approx(0.5).epsilon(1e-8));

    MinimizerReport rep = validate_minimizer(m, free_spec(1), L);
    CHECK(rep.max_moment_residual <= 1e-8);
    CHECK(std::abs(rep.sum_weights - 1.0) <= 1e-8);
}

TEST_CASE("generic 2x2 pair is recovered as one full component") {
    std::mt19937 rng(5);
    std::vector<Eigen::MatrixXd> A = {testutil::random_contraction(2, rng),
                                      testutil::random_contraction(2, rng)};
    MomentFunctional L = functional_from_evaluation(testutil::to_dense_tuple(A), 2, 3, RuleSet(2));

    FlatnessReport flat = check_flatness(L, 2, 1);
    REQUIRE(flat.flat);
    CHECK(flat.rank_low == 4); // the pair generates the full 2x2 algebra

    Minimizer m = pure_trace_gns(L, 2, 1);
    REQUIRE(m.components.size() == 1);
    CHECK(m.components[0].matrices[0].rows() == 2);
    CHECK(m.components[0].weight == doctest::Approx(1.0).epsilon(1e-8));

    MinimizerReport rep = validate_minimizer(m, free_spec(2), L);
    CHECK(rep.max_moment_residual <= 1e-8);
    // The extracted tuple reproduces every stored moment, in particular the
    // objective value of the functional.
    CHECK(std::abs(rep.objective_mixture - rep.objective_functional) <= 1e-8);
}

TEST_CASE("hidden block structure is separated with the right weights") {
    std::vector<Eigen::MatrixXd> A = hidden_two_block_tuple();
    MomentFunctional L = functional_from_evaluation(testutil::to_dense_tuple(A), 2, 4, RuleSet(2));

    FlatnessReport flat = check_flatness(L, 3, 1);
    REQUIRE(flat.flat);
    CHECK(flat.rank_low == 5); // M_2 plus a scalar line

    Minimizer m = pure_trace_gns(L, 3, 1);
    REQUIRE(m.components.size() == 2);

    std::vector<std::pair<long, double>> parts; // (dimension, weight)
    for (const auto& c : m.components) parts.push_back({c.matrices[0].rows(), c.weight});
    std::sort(parts.begin(), parts.end());
    CHECK(parts[0].first == 1);
    CHECK(parts[0].second == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
    CHECK(parts[1].first == 2);
    CHECK(parts[1].second == doctest::Approx(2.0 / 3.0).epsilon(1e-7));

    MinimizerReport rep = validate_minimizer(m, free_spec(2), L);
    CHECK(rep.max_moment_residual <= 1e-8);
    CHECK(std::abs(rep.sum_weights - 1.0) <= 1e-8);
}

TEST_CASE("rank growth across orders is reported as non-flat") {
    std::mt19937 rng(11);
    std::vector<Eigen::MatrixXd> A = {testutil::random_contraction(3, rng),
                                      testutil::random_contraction(3, rng)};
    MomentFunctional L = functional_from_evaluation(testutil::to_dense_tuple(A), 2, 3, RuleSet(2));

    FlatnessReport flat = check_flatness(L, 2, 1);
    CHECK_FALSE(flat.flat); // degree-2 words span 7 of the 9 dimensions
    CHECK(flat.rank_low < flat.rank_full);

    bool threw = false;
    Minimizer m;
    try {
        m = pure_trace_gns(L, 2, 1);
    } catch (const NumericalError&) {
        threw = true;
    }
    if (!threw) {
        CHECK_FALSE(m.flat);
        CHECK(!m.warning.empty());
    }

    CHECK_THROWS_AS(check_flatness(L, 3, 1), InputError); // beyond the stored degree budget
}

TEST_CASE("functional accessors: reduction, linearity, Hankel prefixes") {
    RuleSet proj(2);
    proj.set(1, RuleKind::projection);
    proj.set(2, RuleKind::projection);
    std::mt19937 rng(31);
    std::vector<DenseMat<double>> A = {testutil::to_dense(testutil::random_projection(3, rng)),
                                       testutil::to_dense(testutil::random_projection(3, rng))};
    MomentFunctional L = functional_from_evaluation(A, 2, 2, proj);

    // Values are class functions: unreduced monomials evaluate through their
    // canonical representative.
    TraceMonomial raw = TraceMonomial::trace_of({1, 1, 2});
    TraceMonomial rep = reduce(raw, proj);
    CHECK(L.value(raw) == doctest::Approx(L.value(rep)));

    TracePoly<Rational> f = TracePoly<Rational>::trace_word({1, 2}).scaled(Rational(2)) +
                            TracePoly<Rational>::constant(Rational(1, 2));
    CHECK(L.value(f) == doctest::Approx(2 * L.value(TraceMonomial::trace_of({1, 2})) + 0.5));

    Eigen::MatrixXd h1 = L.hankel(1);
    Eigen::MatrixXd h2 = L.hankel(2);
    CHECK(h1.rows() == L.word_basis.prefix_size(1));
    CHECK(h2.rows() == L.word_basis.size());
    CHECK((h2.topLeftCorner(h1.rows(), h1.cols()) - h1).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(h2(0, 0) == doctest::Approx(1.0)); // normalization at the constant word
    CHECK(testutil::min_eigenvalue(h2) >= -1e-9);
}

TEST_CASE("block diagonalization: commuting and hidden-block tuples") {
    GnsSettings st;

    Eigen::MatrixXd d1 = Eigen::Vector3d(3.0, 1.0, 2.0).asDiagonal();
    BlockDiagonalization bd = block_diagonalize({d1}, st);
    CHECK(int(bd.block_sizes.size()) == 3);
    CHECK((bd.Q.transpose() * bd.Q - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);

    Eigen::MatrixXd q0;
    std::vector<Eigen::MatrixXd> A = hidden_two_block_tuple(&q0);
    BlockDiagonalization b2 = block_diagonalize(A, st);
    std::vector<int> sizes = b2.block_sizes;
    std::sort(sizes.begin(), sizes.end());
    REQUIRE(sizes == std::vector<int>{1, 2});
    CHECK((b2.Q.transpose() * b2.Q - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);

    // Verify the conjugated matrices really are block diagonal on the
    // reported partition.
    for (const Eigen::MatrixXd& m : A) {
        Eigen::MatrixXd t = b2.Q.transpose() * m * b2.Q;
        int off = 0;
        for (int s : b2.block_sizes) {
            for (int i = off; i < off + s; ++i)
                for (int j = 0; j < t.cols(); ++j)
                    if (j < off || j >= off + s) CHECK(std::abs(t(i, j)) <= 1e-8);
            off += s;
        }
    }
}

TEST_CASE("minimizer JSON lists components, weights, and flatness") {
    std::vector<DenseMat<double>> A(1, DenseMat<double>::identity(1));
    MomentFunctional L = functional_from_evaluation(A, 1, 2, RuleSet(1));
    Minimizer m = pure_trace_gns(L, 1, 1);
    std::string js = minimizer_json(m);
    CHECK(js.find("\"components\"") != std::string::npos);
    CHECK(js.find("\"weight\"") != std::string::npos);
    CHECK(js.find("\"flat\": true") != std::string::npos);
}
