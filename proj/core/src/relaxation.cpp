#include "traceopt/relaxation.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>

#include "traceopt/errors.hpp"

namespace traceopt {

std::string to_string(BoundednessMode m) {
    return m == BoundednessMode::per_k ? "per-k" : "single";
}

namespace {

using P = TracePoly<Rational>;
using EntryMap = std::map<int, Rational>;

int localizer_offset(const P& s) { return (s.tracial_degree() + 1) / 2; }

/// Expands one matrix entry into moment-dictionary variables. Word-indexed
/// blocks use L(Tr(u* m v)) per multiplier monomial m; pure-indexed blocks
/// use L(u v m) with everything pure.
EntryMap expand_entry(const TraceMonomial& u, const TraceMonomial& v, const P& s, bool trace_indexed,
                      const RuleSet& rules, const MomentBasis& dict, const std::string& where) {
    EntryMap out;
    for (const auto& [ms, cs] : s.terms()) {
        TraceMonomial label = trace_indexed ? reduce(universal_trace(mul(mul(involution(u), ms), v)), rules)
                                            : reduce(mul(mul(u, v), ms), rules);
        int idx = dict.find(label);
        if (idx < 0)
            throw Error("internal: block '" + where + "' produced a monomial outside the moment dictionary: " +
                        monomial_str(label));
        auto it = out.emplace(idx, 0).first;
        it->second += cs;
        if (it->second == 0) out.erase(it);
    }
    return out;
}

Block assemble_block(const BlockInfo& info, bool trace_indexed, const RuleSet& rules, const MomentBasis& dict) {
    Block blk;
    blk.size = int(info.row_basis.size());
    blk.name = info.name;
    for (int i = 0; i < blk.size; ++i)
        for (int j = i; j < blk.size; ++j) {
            EntryMap e =
                expand_entry(info.row_basis[std::size_t(i)], info.row_basis[std::size_t(j)], info.multiplier,
                             trace_indexed, rules, dict, info.name);
            for (const auto& [var, coeff] : e) blk.entries.push_back({i, j, var, to_double(coeff)});
        }
    return blk;
}

/// Cache of enumerated bases keyed by (degree, pure flag); the rule set is
/// fixed per build.
struct BasisCache {
    int n;
    const RuleSet& rules;
    std::size_t cap;
    std::map<std::pair<int, bool>, MomentBasis> store;

    const MomentBasis& get(int degree, bool pure_only) {
        auto key = std::make_pair(degree, pure_only);
        auto it = store.find(key);
        if (it == store.end())
            it = store.emplace(key, enumerate_basis(n, degree, rules, pure_only, cap)).first;
        return it->second;
    }
};

AssembledRelaxation build(const ProblemSpec& spec_in, int d, const RelaxationOptions& opt,
                          bool trace_indexed_localizers) {
    ProblemSpec spec = spec_in;
    spec.validate();
    const int dmin = minimal_order(spec);
    if (d < dmin)
        throw InputError("relaxation order " + std::to_string(d) + " is below the minimal order " +
                         std::to_string(dmin) + " for this problem");

    AssembledRelaxation R;
    R.spec = spec;
    R.d = d;
    R.options = opt;
    R.rules = compile_rules(spec);
    R.negated = (spec.sense == Sense::maximize);
    R.dictionary = enumerate_basis(spec.n, 2 * d, R.rules, /*pure_only=*/true, opt.basis_cap);
    if (R.dictionary.size() == 0 || !R.dictionary.entries.front().is_constant())
        throw Error("internal: moment dictionary misses the constant class");

    BasisCache cache{spec.n, R.rules, opt.basis_cap, {}};

    ConicProblem cp;
    cp.m = R.dictionary.size();
    cp.c.assign(std::size_t(cp.m), 0.0);

    { // objective: accumulate exactly, then negate for maximization
        EntryMap obj;
        for (const auto& [m, c] : spec.objective.terms()) {
            int idx = R.dictionary.find(reduce(m, R.rules));
            if (idx < 0) throw Error("internal: objective monomial outside the moment dictionary");
            auto it = obj.emplace(idx, 0).first;
            it->second += c;
            if (it->second == 0) obj.erase(it);
        }
        for (const auto& [idx, c] : obj) cp.c[std::size_t(idx)] = to_double(R.negated ? Rational(-c) : c);
    }

    auto push_block = [&](BlockInfo info, bool trace_indexed) {
        cp.blocks.push_back(assemble_block(info, trace_indexed, R.rules, R.dictionary));
        R.info.push_back(std::move(info));
    };

    { // Hankel/moment block over all tracial words of degree <= d
        BlockInfo bi;
        bi.kind = BlockInfo::Kind::moment;
        bi.name = "moment";
        bi.row_basis = cache.get(d, false).entries;
        bi.multiplier = P::constant(1);
        push_block(std::move(bi), /*trace_indexed=*/true);
    }

    // localizing blocks, one per inequality constraint
    for (int ci = 0; ci < int(spec.constraints.size()); ++ci) {
        const Constraint& cons = spec.constraints[std::size_t(ci)];
        if (cons.kind != ConstraintKind::inequality) continue;
        if (!trace_indexed_localizers && !cons.poly.is_pure())
            throw InputError("constraint " + std::to_string(ci) +
                             " has a noncommutative part; pure-indexed localizers require pure "
                             "constraints (use the general builder)");
        BlockInfo bi;
        bi.kind = trace_indexed_localizers ? BlockInfo::Kind::trace_localizer : BlockInfo::Kind::pure_localizer;
        bi.name = "localizer:" + std::to_string(ci);
        bi.row_basis = cache.get(d - localizer_offset(cons.poly), !trace_indexed_localizers).entries;
        bi.multiplier = cons.poly;
        bi.constraint_index = ci;
        push_block(std::move(bi), trace_indexed_localizers);
    }

    // norm-bound localizers for variables without a projection/involution tag
    if (opt.include_boundedness) {
        for (int j = 1; j <= spec.n; ++j) {
            if (R.rules.has_rule(j)) continue;
            if (opt.boundedness == BoundednessMode::per_k) {
                Rational Nk = 1;
                for (int k = 1; k <= d; ++k) {
                    Nk *= spec.N;
                    BlockInfo bi;
                    bi.kind = BlockInfo::Kind::bound_pure;
                    bi.name = "bound:x" + std::to_string(j) + ":" + std::to_string(k);
                    bi.row_basis = cache.get(d - k, true).entries;
                    bi.multiplier = P::constant(Nk) - P::trace_word(Word(std::size_t(2 * k), j));
                    bi.variable = j;
                    bi.power = k;
                    push_block(std::move(bi), /*trace_indexed=*/false);
                }
            } else {
                BlockInfo bi;
                bi.kind = BlockInfo::Kind::bound_trace;
                bi.name = "bound:x" + std::to_string(j);
                bi.row_basis = cache.get(d - 1, false).entries;
                bi.multiplier = P::constant(spec.N) - P::from_word({j, j});
                bi.variable = j;
                bi.power = 1;
                push_block(std::move(bi), /*trace_indexed=*/true);
            }
        }
    }

    // normalization L(1) = 1, then zero rows from leftover equality constraints
    cp.equalities.push_back(LinearEq{{{0, 1.0}}, 1.0});
    std::set<std::vector<std::pair<int, Rational>>> seen;
    for (const Constraint* cons : residual_equalities(spec)) {
        if (!trace_indexed_localizers && !cons->poly.is_pure())
            throw InputError("an equality constraint has a noncommutative part; pure-indexed "
                             "localizers require pure constraints (use the general builder)");
        const MomentBasis& eb = cache.get(d - localizer_offset(cons->poly), !trace_indexed_localizers);
        for (int i = 0; i < eb.size(); ++i)
            for (int j = i; j < eb.size(); ++j) {
                EntryMap e = expand_entry(eb.entries[std::size_t(i)], eb.entries[std::size_t(j)], cons->poly,
                                          trace_indexed_localizers, R.rules, R.dictionary, "equality");
                if (e.empty()) continue;
                std::vector<std::pair<int, Rational>> row(e.begin(), e.end());
                const Rational lead = row.front().second;
                for (auto& [var, c] : row) c /= lead;
                if (!seen.insert(row).second) continue;
                LinearEq le;
                le.rhs = 0.0;
                for (const auto& [var, c] : row) le.coeffs.emplace_back(var, to_double(c));
                cp.equalities.push_back(std::move(le));
            }
    }

    cp.validate();
    R.conic = std::move(cp);
    return R;
}

} // namespace

AssembledRelaxation build_pure_relaxation(const ProblemSpec& spec, int d, const RelaxationOptions& options) {
    return build(spec, d, options, /*trace_indexed_localizers=*/false);
}

AssembledRelaxation build_general_relaxation(const ProblemSpec& spec, int d, const RelaxationOptions& options) {
    return build(spec, d, options, /*trace_indexed_localizers=*/true);
}

double internal_objective(const AssembledRelaxation& relax, const std::vector<double>& y) {
    if (int(y.size()) != relax.conic.m) throw InputError("internal_objective: moment vector has wrong length");
    double v = 0.0;
    for (int k = 0; k < relax.conic.m; ++k) v += relax.conic.c[std::size_t(k)] * y[std::size_t(k)];
    return v;
}

} // namespace traceopt
