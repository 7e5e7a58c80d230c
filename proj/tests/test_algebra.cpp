#include <doctest.h>

#include <random>
#include <vector>

#include "helpers.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/rational.hpp"
#include "traceopt/rewrite.hpp"
#include "traceopt/trace_poly.hpp"
#include "traceopt/word.hpp"

using namespace traceopt;

namespace {

/// Independent oracle for the star-cyclic canonical form: explicit minimum
/// over every rotation of w and of its reversal, with a hand-rolled
/// lexicographic comparison.
Word brute_force_cyclic_min(const Word& w) {
    auto lex_less = [](const Word& a, const Word& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] != b[i]) return a[i] < b[i];
        }
        return false; // equal
    };
    Word best = w;
    for (const Word& base : {w, Word(w.rbegin(), w.rend())}) {
        for (std::size_t r = 0; r < base.size(); ++r) {
            Word rot;
            rot.insert(rot.end(), base.begin() + long(r), base.end());
            rot.insert(rot.end(), base.begin(), base.begin() + long(r));
            if (lex_less(rot, best)) best = rot;
        }
    }
    return best;
}

Word word_from_index(long long idx, int len, int letters) {
    Word w(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        w[std::size_t(i)] = int(idx % letters) + 1;
        idx /= letters;
    }
    return w;
}

Word rotated(Word w, std::size_t k) {
    if (!w.empty()) std::rotate(w.begin(), w.begin() + long(k % w.size()), w.end());
    return w;
}

} // namespace

TEST_CASE("deglex order: length first, then lexicographic") {
    CHECK(deglex_less({}, {1}));
    CHECK(deglex_less({3}, {1, 1}));
    CHECK(deglex_less({1, 2}, {1, 3}));
    CHECK(deglex_less({1, 3}, {2, 1}));
    CHECK_FALSE(deglex_less({1, 2}, {1, 2}));
}

TEST_CASE("canonical_cyclic matches exhaustive brute force (3 letters, length <= 8)") {
    long long pw = 1;
    for (int len = 0; len <= 8; ++len) {
        for (long long idx = 0; idx < pw; ++idx) {
            Word w = word_from_index(idx, len, 3);
            REQUIRE(canonical_cyclic(w) == brute_force_cyclic_min(w));
        }
        pw *= 3;
    }
}

TEST_CASE("canonical_cyclic is invariant under rotation and reversal") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> letter(1, 4), length(0, 10);
    for (int t = 0; t < 200; ++t) {
        Word w(std::size_t(length(rng)));
        for (auto& c : w) c = letter(rng);
        Word canon = canonical_cyclic(w);
        CHECK(canonical_cyclic(reversed(w)) == canon);
        for (std::size_t k = 1; k < w.size(); ++k) CHECK(canonical_cyclic(rotated(w, k)) == canon);
        CHECK(canonical_cyclic(canon) == canon);
    }
}

TEST_CASE("square reduction: projections keep one letter, involutions delete the pair") {
    RuleSet proj(2), invol(2);
    proj.set(1, RuleKind::projection);
    proj.set(2, RuleKind::projection);
    invol.set(1, RuleKind::involution);
    invol.set(2, RuleKind::involution);

    CHECK(reduce({1, 1, 2}, proj) == Word{1, 2});
    CHECK(reduce({1, 1, 1, 1}, proj) == Word{1});
    CHECK(reduce({2, 1, 1, 2}, proj) == Word{2, 1, 2});
    CHECK(reduce({1, 1, 2}, invol) == Word{2});
    CHECK(reduce({1, 2, 2, 1}, invol) == Word{});
    CHECK(reduce({1, 2, 1, 2}, invol) == Word{1, 2, 1, 2});

    // Mixed rules: only the tagged variable reduces.
    RuleSet mixed(2);
    mixed.set(1, RuleKind::projection);
    CHECK(reduce({1, 1, 2, 2}, mixed) == Word{1, 2, 2});
}

TEST_CASE("reduce is idempotent and never lengthens (exhaustive, 2 letters, length <= 6)") {
    for (RuleKind kind : {RuleKind::projection, RuleKind::involution}) {
        RuleSet rules(2);
        rules.set(1, kind);
        rules.set(2, kind);
        long long pw = 1;
        for (int len = 0; len <= 6; ++len) {
            for (long long idx = 0; idx < pw; ++idx) {
                Word w = word_from_index(idx, len, 2);
                Word r = reduce(w, rules);
                CHECK(r.size() <= w.size());
                CHECK(reduce(r, rules) == r);
            }
            pw *= 2;
        }
    }
}

TEST_CASE("trace_class_rep folds reductions exposed at the rotation seam") {
    RuleSet proj(2);
    proj.set(1, RuleKind::projection);
    proj.set(2, RuleKind::projection);
    // reduce alone gives x2*x1*x2; the rotation x1*x2*x2 reduces further.
    CHECK(reduce({2, 1, 1, 2}, proj) == Word{2, 1, 2});
    CHECK(trace_class_rep({2, 1, 1, 2}, proj) == Word{1, 2});

    RuleSet invol(2);
    invol.set(1, RuleKind::involution);
    CHECK(trace_class_rep({1, 2, 1}, invol) == Word{2});
}

TEST_CASE("trace_class_rep is a class invariant (exhaustive, 2 letters, length <= 6)") {
    RuleSet proj(2);
    proj.set(1, RuleKind::projection);
    proj.set(2, RuleKind::projection);
    long long pw = 1;
    for (int len = 0; len <= 6; ++len) {
        for (long long idx = 0; idx < pw; ++idx) {
            Word w = word_from_index(idx, len, 2);
            Word rep = trace_class_rep(w, proj);
            CHECK(reduce(rep, proj) == rep);
            CHECK(trace_class_rep(rep, proj) == rep);
            CHECK(trace_class_rep(reversed(w), proj) == rep);
            for (std::size_t k = 1; k < w.size(); ++k) CHECK(trace_class_rep(rotated(w, k), proj) == rep);
        }
        pw *= 2;
    }
}

TEST_CASE("trace_class_rep is trace-constant on random projection tuples") {
    std::mt19937 rng(42);
    RuleSet proj(3);
    for (int j = 1; j <= 3; ++j) proj.set(j, RuleKind::projection);
    std::vector<DenseMat<double>> A;
    for (int j = 0; j < 3; ++j) A.push_back(testutil::to_dense(testutil::random_projection(4, rng)));

    long long pw = 1;
    for (int len = 0; len <= 4; ++len) {
        for (long long idx = 0; idx < pw; ++idx) {
            Word w = word_from_index(idx, len, 3);
            double raw = evaluate(TracePoly<Rational>::from_word(w), A).normalized_trace();
            double rep = evaluate(TracePoly<Rational>::from_word(trace_class_rep(w, proj)), A).normalized_trace();
            CHECK(std::abs(raw - rep) <= 1e-10);
        }
        pw *= 3;
    }
}

TEST_CASE("TraceMonomial: ordering, product, involution, universal trace") {
    TraceMonomial one = TraceMonomial::unit();
    TraceMonomial x12 = TraceMonomial::from_word({1, 2});
    TraceMonomial t1 = TraceMonomial::trace_of({1});
    TraceMonomial t21 = TraceMonomial::trace_of({2, 1});

    CHECK(one.is_constant());
    CHECK(one < t1);
    CHECK(t1 < x12);               // degree 1 before degree 2
    CHECK(t1.tracial_degree() == 1);
    CHECK(t21.factors[0] == Word{1, 2}); // canonical class representative

    TraceMonomial p = mul(t21, mul(t1, x12));
    CHECK(p.tracial_degree() == 5);
    CHECK(p.factors == std::vector<Word>{{1}, {1, 2}});
    CHECK(p.tail == Word{1, 2});

    TraceMonomial s = involution(p);
    CHECK(s.factors == p.factors); // trace factors are involution-fixed
    CHECK(s.tail == Word{2, 1});

    TraceMonomial u = universal_trace(p);
    CHECK(u.is_pure());
    CHECK(u.factors == std::vector<Word>{{1}, {1, 2}, {1, 2}});
}

TEST_CASE("TracePoly arithmetic identities") {
    using P = TracePoly<Rational>;
    P x1 = P::variable(1), x2 = P::variable(2);
    P p = x1 * x2 - P::constant(Rational(3, 2)) * x2 + P::trace_word({1, 1});
    P q = x2 * x1 + P::constant(2);

    CHECK((p + q) - q == p);
    CHECK(p.scaled(Rational(-1)) == -p);
    CHECK(p * P::constant(0) == P::zero());
    CHECK((p * q).involution() == q.involution() * p.involution());
    CHECK(p.pow(3) == p * p * p);
    CHECK(p.pow(0) == P::constant(1));
    CHECK_THROWS_AS(p.pow(-1), InputError);

    // Universal trace is linear and idempotent on pure polynomials.
    CHECK((p + q).universal_trace() == p.universal_trace() + q.universal_trace());
    CHECK(p.universal_trace().universal_trace() == p.universal_trace());
    CHECK(p.universal_trace().is_pure());

    // Purity and symmetry.
    CHECK_FALSE((x1 * x2).is_symmetric());
    CHECK((x1 * x2 + x2 * x1).is_symmetric());
    CHECK(P::trace_word({1, 2, 3}).is_symmetric()); // pure polynomials are involution-fixed
    CHECK((x1 * x2).universal_trace() == (x2 * x1).universal_trace());
}

TEST_CASE("reduction on polynomials merges monomials that collapse to one class") {
    RuleSet invol(1);
    invol.set(1, RuleKind::involution);
    using P = TracePoly<Rational>;
    // x1^2 reduces to 1, so x1^2 - 1 reduces to zero.
    P p = P::variable(1) * P::variable(1) - P::constant(1);
    CHECK(p.reduced(invol).is_zero());

    RuleSet proj(1);
    proj.set(1, RuleKind::projection);
    // Tr(x1^3) and Tr(x1) are the same class under projections.
    P q = P::trace_word({1, 1, 1}) - P::trace_word({1});
    CHECK(q.reduced(proj).is_zero());
}

TEST_CASE("exact evaluation at rational projection matrices") {
    using P = TracePoly<Rational>;
    DenseMat<Rational> a1(2, 2), a2(2, 2);
    a1.at(0, 0) = 1; // diag(1, 0)
    a2.at(0, 0) = Rational(1, 2);
    a2.at(0, 1) = Rational(1, 2);
    a2.at(1, 0) = Rational(1, 2);
    a2.at(1, 1) = Rational(1, 2);
    std::vector<DenseMat<Rational>> A = {a1, a2};

    CHECK(evaluate_pure<Rational>(P::trace_word({1, 2}), A) == Rational(1, 4));
    CHECK(evaluate_pure<Rational>(P::trace_word({1}) * P::trace_word({2}), A) == Rational(1, 4));
    CHECK(evaluate_pure<Rational>(P::trace_word({1, 2, 1, 2}), A) == Rational(1, 8));
    // Non-pure polynomials evaluate to matrices; the tail contributes directly.
    DenseMat<Rational> m = evaluate(P::variable(1) * P::variable(2), A);
    CHECK(m.at(0, 0) == Rational(1, 2));
    CHECK(m.at(1, 0) == 0);
    CHECK_THROWS_AS(evaluate_pure<Rational>(P::variable(1), A), InputError);
    CHECK_THROWS_AS(evaluate_pure<Rational>(P::trace_word({1, 2, 3}), A), InputError);
}

TEST_CASE("toy objective at the exact optimal projections equals -1/32") {
    ProblemSpec toy = builtin_problem("toy");
    auto X = toy_optimal_projections();
    REQUIRE(X.size() == 3);
    using F = QuadExt<15>;
    for (const auto& m : X) {
        REQUIRE(m.rows() == 2);
        CHECK(m * m == m); // exact idempotents
        CHECK(m.is_symmetric());
    }
    F value = evaluate_pure<F>(toy.objective, X);
    CHECK(value == F(Rational(-1, 32)));
}

TEST_CASE("quadratic field arithmetic") {
    using F = QuadExt<15>;
    F r = F::sqrt_d();
    CHECK(r * r == F(15));
    F x = F(Rational(2, 3), Rational(-1, 5));
    CHECK(x * x.inverse() == F(1));
    CHECK((x - x) == F(0));
    CHECK(from_rational<F>(Rational(7, 2)) == F(Rational(7, 2)));
    CHECK(F(Rational(1), Rational(1)).to_double_approx() == doctest::Approx(1 + std::sqrt(15.0)));
    CHECK_THROWS_AS(F(0).inverse(), NumericalError);
}

TEST_CASE("rationalize: continued-fraction reconstruction with bounded denominators") {
    CHECK(rationalize(0.5) == Rational(1, 2));
    CHECK(rationalize(-0.375) == Rational(-3, 8));
    CHECK(rationalize(1.0 / 3.0, 100) == Rational(1, 3));
    CHECK(rationalize(3.14159265358979, 7) == Rational(22, 7));
    CHECK(rationalize(0.0) == 0);
    double x = 2.0 / 7.0;
    CHECK(rationalize(x, 1000000) == Rational(2, 7));
}
