#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "traceopt/basis.hpp"
#include "traceopt/errors.hpp"
#include "traceopt/hankel.hpp"
#include "traceopt/problem.hpp"

using namespace traceopt;

namespace {

RuleSet projection_rules(int n) {
    RuleSet r(n);
    for (int j = 1; j <= n; ++j) r.set(j, RuleKind::projection);
    return r;
}

} // namespace

TEST_CASE("basis sizes for one free variable match hand counts") {
    RuleSet none(1);
    // Degree <= 2: 1; tr(x), x; tr(x)^2, tr(x^2), tr(x)*x, x^2.
    CHECK(enumerate_basis(1, 2, none, false).size() == 7);
    // Degree 3 adds tr(x)^3, tr(x)tr(x^2), tr(x^3), tr(x)^2 x, tr(x^2) x, tr(x) x^2, x^3.
    CHECK(enumerate_basis(1, 3, none, false).size() == 14);
    // Pure monomials in one letter of degree <= 4 are integer partitions of 0..4.
    CHECK(enumerate_basis(1, 4, none, true).size() == 1 + 1 + 2 + 3 + 5);
}

TEST_CASE("pure basis size for two free variables matches hand count") {
    RuleSet none(2);
    // Degree <= 2: 1; tr(x1), tr(x2); tr(x1)^2, tr(x1)tr(x2), tr(x2)^2,
    // tr(x1^2), tr(x1x2), tr(x2^2).
    CHECK(enumerate_basis(2, 2, none, true).size() == 9);
}

TEST_CASE("free word-basis size stays within the closed-form geometric bounds") {
    for (int n : {1, 2, 3}) {
        RuleSet none(n);
        for (int d : {1, 2, 3}) {
            auto [lo, hi] = count_bound_check(n, d);
            int sz = enumerate_basis(n, d, none, false).size();
            CHECK(lo <= sz);
            CHECK(sz <= hi);
        }
    }
    CHECK_THROWS_AS(count_bound_check(0, 1), InputError);
}

TEST_CASE("three-projection word basis has the published sizes 31 and 108") {
    RuleSet proj = projection_rules(3);
    CHECK(enumerate_basis(3, 2, proj, false).size() == 31);
    CHECK(enumerate_basis(3, 3, proj, false).size() == 108);
}

TEST_CASE("basis entries are sorted, duplicate-free, reduced, and prefix-stable") {
    RuleSet proj = projection_rules(3);
    MomentBasis b2 = enumerate_basis(3, 2, proj, false);
    MomentBasis b3 = enumerate_basis(3, 3, proj, false);

    CHECK(b3.entries.front().is_constant());
    CHECK(std::is_sorted(b3.entries.begin(), b3.entries.end(),
                         [](const TraceMonomial& a, const TraceMonomial& b) { return a < b; }));
    CHECK(int(b3.index.size()) == b3.size());
    for (int i = 0; i < b3.size(); ++i) {
        const TraceMonomial& m = b3.entries[std::size_t(i)];
        CHECK(b3.find(m) == i);
        CHECK(m.tracial_degree() <= 3);
        CHECK(reduce(m, proj) == m); // stored in reduced canonical form
    }

    // The degree-2 basis is a prefix of the degree-3 one.
    REQUIRE(b3.prefix_size(2) == b2.size());
    for (int i = 0; i < b2.size(); ++i) CHECK(b3.entries[std::size_t(i)] == b2.entries[std::size_t(i)]);
    CHECK(b3.prefix_size(3) == b3.size());
    CHECK(b3.prefix_size(0) == 1);

    MomentBasis pure = enumerate_basis(3, 4, proj, true);
    for (const TraceMonomial& m : pure.entries) CHECK(m.is_pure());
}

TEST_CASE("basis enumeration respects the overflow cap") {
    RuleSet proj = projection_rules(3);
    CHECK_THROWS_AS(enumerate_basis(3, 3, proj, false, 50), BasisOverflowError);
    CHECK_NOTHROW(enumerate_basis(3, 3, proj, false, 108));
}

TEST_CASE("Hankel class counts reproduce the published relation counts") {
    RuleSet proj = projection_rules(3);

    HankelStructure h2 = hankel_classes(enumerate_basis(3, 2, proj, false));
    CHECK(h2.size() == 31);
    CHECK(h2.total_class_count() == 81);
    CHECK(h2.free_class_count() == 80);
    CHECK(h2.relation_count() == 881); // 31^2 - 80

    HankelStructure h3 = hankel_classes(enumerate_basis(3, 3, proj, false));
    CHECK(h3.size() == 108);
    CHECK(h3.total_class_count() == 395);
    CHECK(h3.relation_count() == 11270); // 108^2 - 394
}

TEST_CASE("Hankel class labeling is symmetric, dense, and consistent") {
    RuleSet proj = projection_rules(2);
    HankelStructure h = hankel_classes(enumerate_basis(2, 2, proj, false));

    CHECK(h.class_ids(0, 0) == h.constant_class);
    CHECK(h.constant_class == 0);
    std::set<int> seen;
    for (int i = 0; i < h.size(); ++i)
        for (int j = 0; j < h.size(); ++j) {
            CHECK(h.class_ids(i, j) == h.class_ids(j, i));
            seen.insert(h.class_ids(i, j));
        }
    CHECK(int(seen.size()) == h.total_class_count());
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == h.total_class_count() - 1);

    for (const TraceMonomial& rep : h.class_reps) {
        CHECK(rep.is_pure());
        CHECK(h.class_index.at(rep) >= 0);
    }

    // Entry labels agree with the direct computation and with swapping u, v.
    for (int i = 0; i < h.size(); ++i)
        for (int j = i; j < h.size(); ++j) {
            TraceMonomial lbl = hankel_entry_label(h.basis.entries[std::size_t(i)],
                                                   h.basis.entries[std::size_t(j)], proj);
            CHECK(lbl == h.class_reps[std::size_t(h.class_ids(i, j))]);
            CHECK(hankel_entry_label(h.basis.entries[std::size_t(j)],
                                     h.basis.entries[std::size_t(i)], proj) == lbl);
        }
}

TEST_CASE("entries with equal class labels are numerically equal on projection tuples") {
    std::mt19937 rng(2024);
    RuleSet proj = projection_rules(3);
    HankelStructure h = hankel_classes(enumerate_basis(3, 2, proj, false));

    std::vector<DenseMat<double>> A;
    for (int j = 0; j < 3; ++j) A.push_back(testutil::to_dense(testutil::random_projection(3, rng)));

    // Evaluate the raw unreduced entry Tr(u* v) and group by class id.
    std::vector<double> class_value(std::size_t(h.total_class_count()));
    std::vector<bool> seen(std::size_t(h.total_class_count()), false);
    Eigen::MatrixXd H(h.size(), h.size());
    for (int i = 0; i < h.size(); ++i)
        for (int j = 0; j < h.size(); ++j) {
            TraceMonomial raw = universal_trace(mul(involution(h.basis.entries[std::size_t(i)]),
                                                    h.basis.entries[std::size_t(j)]));
            double v = evaluate_pure<double>(TracePoly<Rational>::from_monomial(raw, 1), A);
            H(i, j) = v;
            int id = h.class_ids(i, j);
            if (seen[std::size_t(id)]) {
                CHECK(std::abs(class_value[std::size_t(id)] - v) <= 1e-10);
            } else {
                seen[std::size_t(id)] = true;
                class_value[std::size_t(id)] = v;
            }
        }

    // The filled matrix is a Gram matrix of the evaluation functional.
    CHECK(class_value[0] == doctest::Approx(1.0));
    CHECK(testutil::min_eigenvalue(H) >= -1e-9);
}
