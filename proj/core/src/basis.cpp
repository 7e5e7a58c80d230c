#include "traceopt/basis.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "traceopt/errors.hpp"

namespace traceopt {

int MomentBasis::prefix_size(int k) const {
    int count = 0;
    for (const TraceMonomial& m : entries) {
        if (m.tracial_degree() > k) break;
        ++count;
    }
    return count;
}

namespace {

/// Generates all reduced words of length 1..d (words with no adjacent equal
/// ruled letters) and feeds them to `sink`.
template <class Sink>
void for_each_reduced_word(int n, int d, const RuleSet& rules, Sink&& sink) {
    Word w;
    auto rec = [&](auto&& self) -> void {
        if (!w.empty()) sink(w);
        if (int(w.size()) == d) return;
        for (int c = 1; c <= n; ++c) {
            if (!w.empty() && w.back() == c && rules.has_rule(c)) continue;
            w.push_back(c);
            self(self);
            w.pop_back();
        }
    };
    rec(rec);
}

} // namespace

MomentBasis enumerate_basis(int n, int d, const RuleSet& rules, bool pure_only, std::size_t cap) {
    if (n < 1) throw InputError("enumerate_basis: need at least one variable");
    if (d < 0) throw InputError("enumerate_basis: negative degree bound");

    MomentBasis basis;
    basis.n = n;
    basis.d = d;
    basis.rules = rules;
    basis.pure_only = pure_only;

    // Distinct trace classes, bucketed by the degree of their canonical
    // representative (reductions at the rotation seam can shorten words).
    std::set<Word, decltype(&deglex_less)> class_set(&deglex_less);
    for_each_reduced_word(n, d, rules, [&](const Word& w) { class_set.insert(trace_class_rep(w, rules)); });
    std::vector<std::vector<Word>> classes_by_deg(std::size_t(d) + 1);
    for (const Word& c : class_set)
        if (!c.empty()) classes_by_deg[c.size()].push_back(c);

    // Reduced tail words by exact length (the tail is a plain reduced word,
    // not canonicalized).
    std::vector<std::vector<Word>> tails_by_deg(std::size_t(d) + 1);
    tails_by_deg[0].push_back({});
    if (!pure_only)
        for_each_reduced_word(n, d, rules, [&](const Word& w) { tails_by_deg[w.size()].push_back(w); });

    auto guard = [&](std::size_t count) {
        if (count > cap)
            throw BasisOverflowError("enumerate_basis: basis exceeds cap of " + std::to_string(cap) +
                                     " entries (n=" + std::to_string(n) + ", d=" + std::to_string(d) + ")");
    };

    // Factor multisets as non-decreasing sequences of classes (ordered by
    // degree-lex), extended by every admissible tail.
    std::vector<Word> factors;
    auto emit = [&](int used) {
        int budget = d - used;
        for (int t = 0; t <= budget; ++t)
            for (const Word& tail : tails_by_deg[std::size_t(t)]) {
                TraceMonomial m;
                m.factors = factors;
                m.tail = tail;
                basis.entries.push_back(std::move(m));
                guard(basis.entries.size());
            }
    };
    auto rec = [&](auto&& self, int used, int min_deg, std::size_t min_idx) -> void {
        emit(used);
        for (int g = min_deg; g <= d - used; ++g) {
            const auto& bucket = classes_by_deg[std::size_t(g)];
            for (std::size_t i = (g == min_deg ? min_idx : 0); i < bucket.size(); ++i) {
                factors.push_back(bucket[i]);
                self(self, used + g, g, i);
                factors.pop_back();
            }
        }
    };
    rec(rec, 0, 1, 0);

    std::sort(basis.entries.begin(), basis.entries.end());
    for (int i = 0; i < int(basis.entries.size()); ++i) basis.index.emplace(basis.entries[std::size_t(i)], i);
    if (basis.index.size() != basis.entries.size())
        throw NumericalError("enumerate_basis: internal error, duplicate entries generated");
    return basis;
}

std::pair<long long, long long> count_bound_check(int n, int d) {
    if (n < 1 || d < 0) throw InputError("count_bound_check: invalid arguments");
    auto geometric = [](long long base, int degree) {
        long long acc = 0, pw = 1;
        for (int k = 0; k <= degree; ++k) {
            acc += pw;
            pw *= base;
        }
        return acc; // sum_{k=0..degree} base^k = (base^{degree+1}-1)/(base-1)
    };
    return {geometric(n, d), geometric(2LL * n, d)};
}

} // namespace traceopt
