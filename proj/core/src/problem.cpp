#include "traceopt/problem.hpp"

#include <algorithm>

#include "traceopt/errors.hpp"

namespace traceopt {

void ProblemSpec::validate() const {
    if (n < 1) throw InputError("ProblemSpec: need at least one variable");
    if (N <= 0) throw InputError("ProblemSpec: norm bound N must be positive");
    auto check_vars = [&](const TracePoly<Rational>& p, const std::string& what) {
        for (const auto& [m, c] : p.terms()) {
            auto check_word = [&](const Word& w) {
                for (int letter : w)
                    if (letter < 1 || letter > n)
                        throw InputError("ProblemSpec: " + what + " references x" + std::to_string(letter) +
                                         " outside 1.." + std::to_string(n));
            };
            for (const Word& f : m.factors) check_word(f);
            check_word(m.tail);
        }
    };
    check_vars(objective, "objective");
    if (!objective.is_pure()) throw InputError("ProblemSpec: objective must be a pure trace polynomial");
    if (!objective.is_symmetric()) throw InputError("ProblemSpec: objective must be symmetric");
    RuleSet tags(n);
    for (const Constraint& c : constraints) {
        switch (c.kind) {
            case ConstraintKind::projection_var:
            case ConstraintKind::involution_var:
                if (c.variable < 1 || c.variable > n)
                    throw InputError("ProblemSpec: rule tag references an unknown variable");
                tags.set(c.variable, c.kind == ConstraintKind::projection_var ? RuleKind::projection
                                                                              : RuleKind::involution);
                break;
            case ConstraintKind::inequality:
            case ConstraintKind::equality:
                check_vars(c.poly, "constraint");
                if (!c.poly.is_symmetric())
                    throw InputError("ProblemSpec: constraint polynomials must be symmetric");
                break;
        }
    }
}

namespace {

/// Matches s == sign * (x_j^2 - x_j) or sign * (x_j^2 - 1); returns the rule.
std::optional<RewriteRule> match_rule_pattern(const TracePoly<Rational>& s) {
    if (s.term_count() != 2) return std::nullopt;
    const auto& terms = s.terms();
    auto it = terms.begin();
    const auto& [m1, c1] = *it;
    ++it;
    const auto& [m2, c2] = *it;
    if (c1 != -c2) return std::nullopt;
    // One of the monomials must be x_j^2 (tail of two equal letters).
    auto is_square = [](const TraceMonomial& m, int& j) {
        if (!m.factors.empty() || m.tail.size() != 2 || m.tail[0] != m.tail[1]) return false;
        j = m.tail[0];
        return true;
    };
    auto is_var = [](const TraceMonomial& m, int j) {
        return m.factors.empty() && m.tail.size() == 1 && m.tail[0] == j;
    };
    int j = 0;
    // Map iteration is sorted by degree, so m2 is the square when present.
    if (is_square(m2, j) && c2 == 1) {
        if (is_var(m1, j) && c1 == -1) return RewriteRule{RuleKind::projection, j};
        if (m1.is_constant() && c1 == -1) return RewriteRule{RuleKind::involution, j};
    }
    if (is_square(m2, j) && c2 == -1) {
        if (is_var(m1, j) && c1 == 1) return RewriteRule{RuleKind::projection, j};
        if (m1.is_constant() && c1 == 1) return RewriteRule{RuleKind::involution, j};
    }
    return std::nullopt;
}

} // namespace

RuleSet compile_rules(const ProblemSpec& spec) {
    RuleSet rules(spec.n);
    for (const Constraint& c : spec.constraints) {
        switch (c.kind) {
            case ConstraintKind::projection_var:
                rules.set(c.variable, RuleKind::projection);
                break;
            case ConstraintKind::involution_var:
                rules.set(c.variable, RuleKind::involution);
                break;
            case ConstraintKind::equality:
                if (auto r = match_rule_pattern(c.poly)) rules.set(r->variable, r->kind);
                break;
            case ConstraintKind::inequality:
                break;
        }
    }
    return rules;
}

std::vector<const Constraint*> residual_equalities(const ProblemSpec& spec) {
    std::vector<const Constraint*> out;
    for (const Constraint& c : spec.constraints)
        if (c.kind == ConstraintKind::equality && !match_rule_pattern(c.poly)) out.push_back(&c);
    return out;
}

std::vector<const Constraint*> inequality_constraints(const ProblemSpec& spec) {
    std::vector<const Constraint*> out;
    for (const Constraint& c : spec.constraints)
        if (c.kind == ConstraintKind::inequality) out.push_back(&c);
    return out;
}

int minimal_order(const ProblemSpec& spec) {
    int d = (spec.objective.tracial_degree() + 1) / 2;
    for (const Constraint& c : spec.constraints)
        if (c.kind == ConstraintKind::inequality || c.kind == ConstraintKind::equality)
            d = std::max(d, (c.poly.tracial_degree() + 1) / 2);
    RuleSet rules = compile_rules(spec);
    for (int j = 1; j <= spec.n; ++j)
        if (!rules.has_rule(j)) {
            d = std::max(d, 1); // norm-bound localizer N - x_j^2 has degree 2
            break;
        }
    return std::max(d, 1);
}

namespace {

using P = TracePoly<Rational>;

P tr(std::initializer_list<int> letters) { return P::trace_word(Word(letters)); }

ProblemSpec make_toy() {
    ProblemSpec s;
    s.name = "toy";
    s.n = 3;
    s.sense = Sense::minimize;
    s.N = 1;
    s.objective = tr({1, 2, 3}) + tr({1, 2}) * tr({3});
    for (int j = 1; j <= 3; ++j) s.constraints.push_back({ConstraintKind::projection_var, {}, j});
    return s;
}

ProblemSpec make_bell_quadratic() {
    // Two observables per site; site variables x1,x2 and y1,y2 -> x3,x4.
    ProblemSpec s;
    s.name = "bell-quadratic";
    s.n = 4;
    s.sense = Sense::maximize;
    s.N = 1;
    P t1 = tr({1, 4}) + tr({2, 3}); // Tr(x1 y2) + Tr(x2 y1)
    P t2 = tr({1, 3}) - tr({2, 4}); // Tr(x1 y1) - Tr(x2 y2)
    s.objective = t1 * t1 + t2 * t2;
    for (int j = 1; j <= 4; ++j) s.constraints.push_back({ConstraintKind::involution_var, {}, j});
    return s;
}

ProblemSpec make_bell_covariance() {
    // Three observables per site; x1..x3 and y1..y3 -> x4..x6. Sum of
    // covariances Tr(x_i y_j) - Tr(x_i)Tr(y_j) with the sign pattern
    // + + + / + + - / + - 0.
    ProblemSpec s;
    s.name = "bell-covariance";
    s.n = 6;
    s.sense = Sense::maximize;
    s.N = 1;
    const int sign[3][3] = {{1, 1, 1}, {1, 1, -1}, {1, -1, 0}};
    P a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (sign[i][j] == 0) continue;
            P cov = tr({i + 1, j + 4}) - tr({i + 1}) * tr({j + 4});
            a += cov.scaled(Rational(sign[i][j]));
        }
    s.objective = a;
    for (int j = 1; j <= 6; ++j) s.constraints.push_back({ConstraintKind::involution_var, {}, j});
    return s;
}

ProblemSpec make_bell_bilocal() {
    // Three-party bilocal scenario: x1,x2; y'1,y'2 -> x3,x4; y''1,y''2 ->
    // x5,x6; z1,z2 -> x7,x8, all projections. Objective
    // -(1/8)(J1+J2)^2 + J1 + J2 - 2 with
    // J1 = sum_{i,j} Tr(x_i y'_1) Tr(y''_1 z_j),
    // J2 = sum_{i,j} (-1)^{i+j} Tr(x_i y'_2) Tr(y''_2 z_j).
    ProblemSpec s;
    s.name = "bell-bilocal";
    s.n = 8;
    s.sense = Sense::maximize;
    s.N = 1;
    P J1, J2;
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j) {
            J1 += tr({i, 3}) * tr({5, 6 + j});
            int sg = ((i + j) % 2 == 0) ? 1 : -1;
            J2 += (tr({i, 4}) * tr({6, 6 + j})).scaled(Rational(sg));
        }
    P J = J1 + J2;
    s.objective = (J * J).scaled(Rational(-1, 8)) + J - P::constant(2);
    for (int j = 1; j <= 8; ++j) s.constraints.push_back({ConstraintKind::projection_var, {}, j});
    return s;
}

} // namespace

std::vector<std::string> builtin_problem_ids() {
    return {"toy", "bell-quadratic", "bell-covariance", "bell-bilocal"};
}

ProblemSpec builtin_problem(const std::string& id) {
    ProblemSpec s;
    if (id == "toy")
        s = make_toy();
    else if (id == "bell-quadratic")
        s = make_bell_quadratic();
    else if (id == "bell-covariance")
        s = make_bell_covariance();
    else if (id == "bell-bilocal")
        s = make_bell_bilocal();
    else
        throw InputError("unknown builtin problem '" + id + "'");
    s.validate();
    return s;
}

std::vector<DenseMat<QuadExt<15>>> toy_optimal_projections() {
    using Q = QuadExt<15>;
    auto mat = [](Q a, Q b, Q c, Q d) {
        DenseMat<Q> m(2, 2);
        m.at(0, 0) = a;
        m.at(0, 1) = b;
        m.at(1, 0) = c;
        m.at(1, 1) = d;
        return m;
    };
    const Q s = Q::sqrt_d(); // sqrt(15)
    std::vector<DenseMat<Q>> X;
    X.push_back(mat(Q(1), Q(0), Q(0), Q(0)));
    X.push_back(mat(Q(Rational(1, 16)), s * Q(Rational(1, 16)), s * Q(Rational(1, 16)), Q(Rational(15, 16))));
    X.push_back(mat(Q(Rational(3, 8)), -(s * Q(Rational(1, 8))), -(s * Q(Rational(1, 8))), Q(Rational(5, 8))));
    return X;
}

} // namespace traceopt
