#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "traceopt/rewrite.hpp"
#include "traceopt/trace_poly.hpp"

namespace traceopt {

/// Ordered basis of tracial words of bounded tracial degree: all monomials
/// prod Tr(u_i) * v with reduced words, canonical trace-class factors, sorted
/// degree-lexicographically with the constant monomial first. `pure_only`
/// restricts to monomials with empty tail.
struct MomentBasis {
    int n = 0;
    int d = 0;
    RuleSet rules;
    bool pure_only = false;
    std::vector<TraceMonomial> entries;
    std::map<TraceMonomial, int> index;

    int size() const { return int(entries.size()); }
    int find(const TraceMonomial& m) const {
        auto it = index.find(m);
        return it == index.end() ? -1 : it->second;
    }
    /// Entries of tracial degree <= k form a prefix; returns its length.
    int prefix_size(int k) const;
};

inline constexpr std::size_t kDefaultBasisCap = 20000;

/// Enumerates the complete, duplicate-free, sorted basis. Throws
/// BasisOverflowError when more than `cap` entries would be produced.
MomentBasis enumerate_basis(int n, int d, const RuleSet& rules, bool pure_only,
                            std::size_t cap = kDefaultBasisCap);

/// Closed-form bounds on the number of tracial words of degree <= d in n
/// letters without rewriting rules: geometric sums in n and 2n.
std::pair<long long, long long> count_bound_check(int n, int d);

} // namespace traceopt
