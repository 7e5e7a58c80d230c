#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "traceopt/errors.hpp"
#include "traceopt/parser.hpp"
#include "traceopt/problem.hpp"

using namespace traceopt;

namespace {

std::string problem_path(const std::string& id) {
    return std::string(TRACEOPT_PROBLEM_DIR) + "/" + id + ".tp";
}

bool specs_equal(const ProblemSpec& a, const ProblemSpec& b) {
    if (a.n != b.n || a.sense != b.sense || a.N != b.N) return false;
    if (!(a.objective == b.objective)) return false;
    if (a.constraints.size() != b.constraints.size()) return false;
    for (std::size_t i = 0; i < a.constraints.size(); ++i) {
        const Constraint& x = a.constraints[i];
        const Constraint& y = b.constraints[i];
        if (x.kind != y.kind || x.variable != y.variable || !(x.poly == y.poly)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("expression printer round-trips through the parser") {
    const std::vector<std::string> corpus = {
        "0",
        "1",
        "-1",
        "3/4",
        "x1",
        "tr(x1)",
        "tr(x1*x2)*tr(x3)",
        "2*x1*x2 - x2*x1",
        "(1 + tr(x1))^3",
        "tr(x1^2)/2 - 1e-2",
        "tr((x1+x2)*(x1+x2))",
        "-tr(x1)*(-tr(x2))",
        "tr(x1*x2*x3) + tr(x1*x2)*tr(x3)",
        "(tr(x1*x3) - tr(x2*x4))^2",
        "1/3*x1 + x2/3 - tr(x2*x1*x2)",
    };
    for (const std::string& text : corpus) {
        TracePoly<Rational> p = parse_trace_poly(text);
        TracePoly<Rational> again = parse_trace_poly(to_string(p));
        CHECK_MESSAGE(p == again, "round-trip failed for: ", text);
    }
}

TEST_CASE("parser algebraic normalizations") {
    // Trace distributes linearly over sums and pulls scalars out.
    CHECK(parse_trace_poly("tr(x1 + 2*x2)") == parse_trace_poly("tr(x1) + 2*tr(x2)"));
    // Nested traces multiply out through the universal trace.
    CHECK(parse_trace_poly("tr(tr(x1)*x2)") == parse_trace_poly("tr(x1)*tr(x2)"));
    CHECK(parse_trace_poly("tr(1 + x1)") == parse_trace_poly("1 + tr(x1)"));
    // Cyclic normalization of trace words happens at parse time.
    CHECK(parse_trace_poly("tr(x2*x1)") == parse_trace_poly("tr(x1*x2)"));
    // Powers and division by constants.
    CHECK(parse_trace_poly("x1^3") == parse_trace_poly("x1*x1*x1"));
    CHECK(parse_trace_poly("x1/4") == parse_trace_poly("1/4*x1"));
    // Exact decimal handling.
    CHECK(parse_trace_poly("0.125*x1") == parse_trace_poly("1/8*x1"));
    CHECK(parse_trace_poly("2.5e1") == parse_trace_poly("25"));
}

TEST_CASE("parser rejects malformed input") {
    CHECK_THROWS_AS(parse_trace_poly("x0"), InputError);
    CHECK_THROWS_AS(parse_trace_poly("y1"), InputError);
    CHECK_THROWS_AS(parse_trace_poly("tr(x1"), InputError);
    CHECK_THROWS_AS(parse_trace_poly("(x1))"), InputError);
    CHECK_THROWS_AS(parse_trace_poly("x1 +"), InputError);
    CHECK_THROWS_AS(parse_trace_poly(""), InputError);
    CHECK_THROWS_AS(parse_trace_poly("x1/x2"), InputError);      // nonconstant divisor
    CHECK_THROWS_AS(parse_trace_poly("x1/(1-1)"), InputError);   // zero divisor
    CHECK_THROWS_AS(parse_trace_poly("x1^x2"), InputError);      // nonconstant exponent
    CHECK_THROWS_AS(parse_trace_poly("x3", 2), InputError);      // out of declared range
    CHECK_NOTHROW(parse_trace_poly("x2", 2));
}

TEST_CASE("parse_scalar evaluates constant expressions") {
    CHECK(parse_scalar("3/4 + 1/4") == Rational(1));
    CHECK(parse_scalar("2^10") == Rational(1024));
    CHECK(parse_scalar("-0.5") == Rational(-1, 2));
    CHECK_THROWS_AS(parse_scalar("x1"), InputError);
    CHECK_THROWS_AS(parse_scalar("tr(x1)"), InputError);
}

TEST_CASE("problem files in the repository parse to the built-in definitions") {
    for (const std::string& id : builtin_problem_ids()) {
        std::ifstream in(problem_path(id));
        REQUIRE_MESSAGE(in.good(), "missing problem file for ", id);
        ProblemFile pf = parse_problem_file(in);
        ProblemSpec ref = builtin_problem(id);
        CHECK_MESSAGE(specs_equal(pf.spec, ref), "definition drift for ", id);
        CHECK(pf.order >= 1); // every shipped file suggests an order
    }
}

TEST_CASE("problem rendering round-trips to an equal spec") {
    for (const std::string& id : builtin_problem_ids()) {
        ProblemSpec ref = builtin_problem(id);
        ProblemFile pf = parse_problem_text(problem_file_text(ref, 2));
        CHECK(specs_equal(pf.spec, ref));
        CHECK(pf.order == 2);
        CHECK(pf.spec.name == ref.name);
    }
}

TEST_CASE("problem files: directives, defaults, and errors") {
    const std::string text =
        "# comment\n"
        "problem sample\n"
        "vars 2\n"
        "sense maximize\n"
        "bound 4\n"
        "objective tr(x1*x2)\n"
        "constraint involution x1\n"
        "constraint inequality 1 - tr(x2^2)\n"
        "constraint equality tr(x2) - 1/2\n"
        "order 3\n"
        "option boundedness single\n";
    ProblemFile pf = parse_problem_text(text);
    CHECK(pf.spec.name == "sample");
    CHECK(pf.spec.n == 2);
    CHECK(pf.spec.sense == Sense::maximize);
    CHECK(pf.spec.N == Rational(4));
    CHECK(pf.order == 3);
    CHECK(pf.has_boundedness_mode);
    CHECK(pf.boundedness == BoundednessMode::single);
    REQUIRE(pf.spec.constraints.size() == 3);
    CHECK(pf.spec.constraints[0].kind == ConstraintKind::involution_var);
    CHECK(pf.spec.constraints[0].variable == 1);
    CHECK(pf.spec.constraints[1].kind == ConstraintKind::inequality);
    CHECK(pf.spec.constraints[2].kind == ConstraintKind::equality);

    CHECK_THROWS_AS(parse_problem_text("vars 1\nfrobnicate 3\nobjective x1\n"), InputError);
    CHECK_THROWS_AS(parse_problem_text("vars 1\nobjective tr(x2)\n"), InputError);
    CHECK_THROWS_AS(parse_problem_text("vars 1\n"), InputError); // objective required
    CHECK_THROWS_AS(parse_problem_text("vars 1\nobjective tr(x1)\nconstraint projection x9\n"),
                    InputError);
}
