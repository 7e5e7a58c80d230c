#pragma once

#include <array>
#include <vector>

#include "traceopt/word.hpp"

namespace traceopt {

/// Word-shortening rules derived from projection (x_j^2 = x_j) and
/// involution (x_j^2 = 1) constraints. At most one rule per variable.
enum class RuleKind { none, projection, involution };

struct RewriteRule {
    RuleKind kind = RuleKind::none;
    int variable = 0; // 1-based index
};

/// Per-variable rule table. Immutable after construction.
class RuleSet {
public:
    RuleSet() = default;
    explicit RuleSet(int n) : kinds_(std::size_t(n) + 1, RuleKind::none) {}

    void set(int variable, RuleKind kind);
    RuleKind rule_for(int variable) const {
        if (variable <= 0 || std::size_t(variable) >= kinds_.size()) return RuleKind::none;
        return kinds_[std::size_t(variable)];
    }
    bool has_rule(int variable) const { return rule_for(variable) != RuleKind::none; }
    bool empty() const;
    int size() const { return kinds_.empty() ? 0 : int(kinds_.size()) - 1; }

    std::vector<RewriteRule> rules() const;

private:
    std::vector<RuleKind> kinds_; // index 0 unused
};

/// Fixed point of the square-reduction rewriting system: repeatedly replaces
/// x_j x_j by x_j (projection) or deletes it (involution). Single left-to-right
/// stack pass; the rules only shorten words, so this reaches the unique normal
/// form.
Word reduce(const Word& w, const RuleSet& rules);

/// Canonical representative of the trace class of `w` under square reduction:
/// the degree-lex minimum over the closure of reduce(w) under rotation,
/// reversal, and re-reduction (a rotation can expose a new reducible pair at
/// the seam). With no rules this coincides with canonical_cyclic.
Word trace_class_rep(const Word& w, const RuleSet& rules);

} // namespace traceopt
