#include "traceopt/rewrite.hpp"

#include <queue>
#include <unordered_set>

#include "traceopt/errors.hpp"

namespace traceopt {

void RuleSet::set(int variable, RuleKind kind) {
    if (variable <= 0) throw InputError("RuleSet: variable indices are 1-based");
    if (std::size_t(variable) >= kinds_.size()) kinds_.resize(std::size_t(variable) + 1, RuleKind::none);
    if (kinds_[std::size_t(variable)] != RuleKind::none && kinds_[std::size_t(variable)] != kind)
        throw InputError("RuleSet: conflicting rules for variable x" + std::to_string(variable));
    kinds_[std::size_t(variable)] = kind;
}

bool RuleSet::empty() const {
    for (RuleKind k : kinds_)
        if (k != RuleKind::none) return false;
    return true;
}

std::vector<RewriteRule> RuleSet::rules() const {
    std::vector<RewriteRule> out;
    for (int j = 1; j < int(kinds_.size()); ++j)
        if (kinds_[std::size_t(j)] != RuleKind::none) out.push_back({kinds_[std::size_t(j)], j});
    return out;
}

Word reduce(const Word& w, const RuleSet& rules) {
    if (rules.empty()) return w;
    Word stack;
    stack.reserve(w.size());
    for (int c : w) {
        if (!stack.empty() && stack.back() == c) {
            switch (rules.rule_for(c)) {
                case RuleKind::projection:
                    continue; // x x -> x : keep the existing letter
                case RuleKind::involution:
                    stack.pop_back(); // x x -> 1 : cancel the pair
                    continue;
                case RuleKind::none:
                    break;
            }
        }
        stack.push_back(c);
    }
    return stack;
}

Word trace_class_rep(const Word& w, const RuleSet& rules) {
    Word start = reduce(w, rules);
    if (start.size() <= 1) return start;
    if (rules.empty()) return canonical_cyclic(start);

    // Closure of the reduced word under rotation + reversal with re-reduction,
    // then the degree-lex minimum of the closure. Reductions triggered at the
    // rotation seam can shorten the word, so the closure is explored as a BFS.
    std::unordered_set<Word, WordHash> seen;
    std::queue<Word> pending;
    seen.insert(start);
    pending.push(start);
    Word best = start;
    auto visit = [&](Word u) {
        u = reduce(u, rules);
        if (seen.insert(u).second) {
            if (deglex_less(u, best)) best = u;
            pending.push(u);
        }
    };
    while (!pending.empty()) {
        Word u = pending.front();
        pending.pop();
        visit(reversed(u));
        if (u.size() >= 2) {
            Word rot = u;
            for (std::size_t i = 0; i + 1 < u.size(); ++i) {
                std::rotate(rot.begin(), rot.begin() + 1, rot.end());
                visit(rot);
            }
        }
    }
    return best;
}

} // namespace traceopt
