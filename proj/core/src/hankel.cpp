#include "traceopt/hankel.hpp"

namespace traceopt {

TraceMonomial hankel_entry_label(const TraceMonomial& u, const TraceMonomial& v, const RuleSet& rules) {
    // Trace form of u* v: all trace factors of u and v survive (the involution
    // fixes them), and the tails contribute Tr(reverse(tail_u) . tail_v).
    TraceMonomial label;
    label.factors.reserve(u.factors.size() + v.factors.size() + 1);
    for (const Word& f : u.factors) label.factors.push_back(trace_class_rep(f, rules));
    for (const Word& f : v.factors) label.factors.push_back(trace_class_rep(f, rules));
    Word joined = concat(reversed(u.tail), v.tail);
    if (!joined.empty()) label.factors.push_back(trace_class_rep(joined, rules));
    label.normalize();
    return label;
}

HankelStructure hankel_classes(const MomentBasis& basis) {
    HankelStructure h;
    h.basis = basis;
    const int s = basis.size();
    h.class_ids.resize(s, s);

    for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) {
            TraceMonomial label =
                hankel_entry_label(basis.entries[std::size_t(i)], basis.entries[std::size_t(j)], basis.rules);
            auto [it, fresh] = h.class_index.emplace(std::move(label), int(h.class_reps.size()));
            if (fresh) h.class_reps.push_back(it->first);
            h.class_ids(i, j) = it->second;
            h.class_ids(j, i) = it->second;
        }
    }
    h.constant_class = h.class_ids(0, 0);
    return h;
}

} // namespace traceopt
