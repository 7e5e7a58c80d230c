// Microbenchmarks for the hot paths: word canonicalization, basis
// enumeration, moment-matrix assembly, and a small end-to-end solve.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "traceopt/basis.hpp"
#include "traceopt/conic.hpp"
#include "traceopt/hankel.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/relaxation.hpp"
#include "traceopt/trace_poly.hpp"

namespace {

using namespace traceopt;

std::vector<TraceMonomial> random_monomials(int n, int len, int count, bool with_tail) {
    std::mt19937 rng(12345);
    std::uniform_int_distribution<int> letter(1, n);
    std::vector<TraceMonomial> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        Word w;
        for (int k = 0; k < len; ++k) w.push_back(letter(rng));
        out.push_back(with_tail ? TraceMonomial::from_word(w) : TraceMonomial::trace_of(w));
    }
    return out;
}

void BM_canonicalize_free(benchmark::State& state) {
    RuleSet rules(3);
    auto ms = random_monomials(3, int(state.range(0)), 64, false);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduce(ms[i], rules));
        i = (i + 1) % ms.size();
    }
}
BENCHMARK(BM_canonicalize_free)->Arg(6)->Arg(10)->Arg(14);

void BM_canonicalize_projections(benchmark::State& state) {
    RuleSet rules(3);
    for (int j = 1; j <= 3; ++j) rules.set(j, RuleKind::projection);
    auto ms = random_monomials(3, int(state.range(0)), 64, false);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduce(ms[i], rules));
        i = (i + 1) % ms.size();
    }
}
BENCHMARK(BM_canonicalize_projections)->Arg(6)->Arg(10)->Arg(14);

void BM_enumerate_basis(benchmark::State& state) {
    RuleSet rules(3);
    for (int j = 1; j <= 3; ++j) rules.set(j, RuleKind::projection);
    for (auto _ : state)
        benchmark::DoNotOptimize(enumerate_basis(3, int(state.range(0)), rules, true));
}
BENCHMARK(BM_enumerate_basis)->Arg(4)->Arg(6);

void BM_hankel_classes(benchmark::State& state) {
    RuleSet rules(3);
    for (int j = 1; j <= 3; ++j) rules.set(j, RuleKind::projection);
    MomentBasis basis = enumerate_basis(3, int(state.range(0)), rules, false);
    for (auto _ : state) benchmark::DoNotOptimize(hankel_classes(basis));
}
BENCHMARK(BM_hankel_classes)->Arg(2)->Arg(3);

void BM_assemble_relaxation(benchmark::State& state) {
    ProblemSpec spec = builtin_problem("toy");
    for (auto _ : state)
        benchmark::DoNotOptimize(build_pure_relaxation(spec, int(state.range(0))));
}
BENCHMARK(BM_assemble_relaxation)->Arg(2)->Arg(3);

void BM_solve_small(benchmark::State& state) {
    ProblemSpec spec = builtin_problem("toy");
    AssembledRelaxation relax = build_pure_relaxation(spec, 2);
    SolverSettings st;
    st.record_history = false;
    for (auto _ : state) benchmark::DoNotOptimize(solve(relax.conic, st));
}
BENCHMARK(BM_solve_small);

} // namespace

BENCHMARK_MAIN();
