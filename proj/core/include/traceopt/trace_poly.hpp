#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "traceopt/errors.hpp"
#include "traceopt/rational.hpp"
#include "traceopt/rewrite.hpp"
#include "traceopt/word.hpp"

namespace traceopt {

/// A tracial word: a multiset of trace-class factors Tr(u_1)...Tr(u_m) times a
/// noncommutative tail word v. Factors are canonical star-cyclic class
/// representatives, kept sorted; the empty factor Tr(1)=1 is never stored.
struct TraceMonomial {
    std::vector<Word> factors;
    Word tail;

    int tracial_degree() const {
        std::size_t d = tail.size();
        for (const Word& f : factors) d += f.size();
        return int(d);
    }
    bool is_pure() const { return tail.empty(); }
    bool is_constant() const { return factors.empty() && tail.empty(); }

    /// Sorts factors and drops empty ones; assumes each factor is already a
    /// canonical class representative.
    void normalize() {
        std::erase_if(factors, [](const Word& f) { return f.empty(); });
        std::sort(factors.begin(), factors.end(), deglex_less);
    }

    static TraceMonomial unit() { return {}; }
    static TraceMonomial from_word(Word w) {
        TraceMonomial m;
        m.tail = std::move(w);
        return m;
    }
    /// Tr(w); the canonical class representative is taken here.
    static TraceMonomial trace_of(const Word& w) {
        TraceMonomial m;
        if (!w.empty()) m.factors.push_back(canonical_cyclic(w));
        return m;
    }
};

/// Ordering: tracial degree first, then factors lexicographically (elementwise
/// degree-lex, shorter factor list first), then the tail in degree-lex. Sorting
/// by degree first keeps every degree-d basis a prefix of the degree-(d+1) one.
inline bool operator<(const TraceMonomial& a, const TraceMonomial& b) {
    int da = a.tracial_degree(), db = b.tracial_degree();
    if (da != db) return da < db;
    std::size_t k = std::min(a.factors.size(), b.factors.size());
    for (std::size_t i = 0; i < k; ++i) {
        if (deglex_less(a.factors[i], b.factors[i])) return true;
        if (deglex_less(b.factors[i], a.factors[i])) return false;
    }
    if (a.factors.size() != b.factors.size()) return a.factors.size() < b.factors.size();
    return deglex_less(a.tail, b.tail);
}
inline bool operator==(const TraceMonomial& a, const TraceMonomial& b) {
    return a.factors == b.factors && a.tail == b.tail;
}
inline bool operator!=(const TraceMonomial& a, const TraceMonomial& b) { return !(a == b); }

inline TraceMonomial mul(const TraceMonomial& a, const TraceMonomial& b) {
    TraceMonomial m;
    m.factors.reserve(a.factors.size() + b.factors.size());
    std::merge(a.factors.begin(), a.factors.end(), b.factors.begin(), b.factors.end(),
               std::back_inserter(m.factors), deglex_less);
    m.tail = concat(a.tail, b.tail);
    return m;
}

/// The star involution fixes trace factors (each class contains the reversal
/// of its words) and reverses the tail.
inline TraceMonomial involution(const TraceMonomial& m) {
    TraceMonomial r = m;
    r.tail = reversed(m.tail);
    return r;
}

/// The universal trace turns the tail into one more trace factor.
inline TraceMonomial universal_trace(const TraceMonomial& m) {
    if (m.tail.empty()) return m;
    TraceMonomial r;
    r.factors = m.factors;
    r.factors.push_back(canonical_cyclic(m.tail));
    r.normalize();
    return r;
}

/// Applies square-reduction rules inside every trace factor and the tail,
/// re-canonicalizing factors afterwards.
inline TraceMonomial reduce(const TraceMonomial& m, const RuleSet& rules) {
    if (rules.empty()) return m;
    TraceMonomial r;
    r.factors.reserve(m.factors.size());
    for (const Word& f : m.factors) {
        Word g = trace_class_rep(f, rules);
        if (!g.empty()) r.factors.push_back(std::move(g));
    }
    r.tail = reduce(m.tail, rules);
    r.normalize();
    return r;
}

inline std::string monomial_str(const TraceMonomial& m) {
    if (m.is_constant()) return "1";
    std::string s;
    for (const Word& f : m.factors) {
        if (!s.empty()) s += "*";
        s += "tr(" + word_str(f) + ")";
    }
    if (!m.tail.empty()) {
        if (!s.empty()) s += "*";
        s += word_str(m.tail);
    }
    return s;
}

namespace detail {
inline std::string coeff_str(const Rational& q) { return q.get_str(); }
inline std::string coeff_str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
inline double coeff_to_field(double c, double*) { return c; }
template <class F>
F coeff_to_field(const Rational& c, F*) { return from_rational<F>(c); }
} // namespace detail

/// Sparse trace polynomial with scalar coefficients K (exact rationals or
/// doubles). Zero coefficients are never stored.
template <class K>
class TracePoly {
public:
    using Terms = std::map<TraceMonomial, K>;

    TracePoly() = default;

    static TracePoly zero() { return {}; }
    static TracePoly constant(const K& c) {
        TracePoly p;
        p.add_term(TraceMonomial::unit(), c);
        return p;
    }
    static TracePoly variable(int j) {
        TracePoly p;
        p.add_term(TraceMonomial::from_word({j}), K(1));
        return p;
    }
    static TracePoly from_word(const Word& w) {
        TracePoly p;
        p.add_term(TraceMonomial::from_word(w), K(1));
        return p;
    }
    static TracePoly trace_word(const Word& w) {
        TracePoly p;
        p.add_term(TraceMonomial::trace_of(w), K(1));
        return p;
    }
    static TracePoly from_monomial(const TraceMonomial& m, const K& c) {
        TracePoly p;
        p.add_term(m, c);
        return p;
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    K coeff(const TraceMonomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? K(0) : it->second;
    }

    /// True for the zero polynomial or a constant multiple of 1.
    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant());
    }
    /// The coefficient of the constant monomial.
    K constant_value() const { return coeff(TraceMonomial::unit()); }

    void add_term(const TraceMonomial& m, const K& c) {
        if (c == K(0)) return;
        auto [it, fresh] = terms_.emplace(m, c);
        if (!fresh) {
            it->second += c;
            if (it->second == K(0)) terms_.erase(it);
        }
    }

    TracePoly& operator+=(const TracePoly& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    TracePoly& operator-=(const TracePoly& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, K(0) - c);
        return *this;
    }
    friend TracePoly operator+(TracePoly a, const TracePoly& b) { a += b; return a; }
    friend TracePoly operator-(TracePoly a, const TracePoly& b) { a -= b; return a; }
    friend TracePoly operator-(const TracePoly& a) { return a.scaled(K(-1)); }

    TracePoly scaled(const K& s) const {
        TracePoly r;
        if (s == K(0)) return r;
        for (const auto& [m, c] : terms_) r.terms_.emplace(m, c * s);
        return r;
    }

    friend TracePoly operator*(const TracePoly& a, const TracePoly& b) {
        TracePoly r;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) r.add_term(mul(ma, mb), ca * cb);
        return r;
    }

    TracePoly pow(int e) const {
        if (e < 0) throw InputError("TracePoly::pow: negative exponent");
        TracePoly r = constant(K(1));
        TracePoly base = *this;
        while (e > 0) {
            if (e & 1) r = r * base;
            base = base * base;
            e >>= 1;
        }
        return r;
    }

    TracePoly involution() const {
        TracePoly r;
        for (const auto& [m, c] : terms_) r.terms_.emplace(traceopt::involution(m), c);
        return r;
    }

    TracePoly universal_trace() const {
        TracePoly r;
        for (const auto& [m, c] : terms_) r.add_term(traceopt::universal_trace(m), c);
        return r;
    }

    TracePoly reduced(const RuleSet& rules) const {
        if (rules.empty()) return *this;
        TracePoly r;
        for (const auto& [m, c] : terms_) r.add_term(traceopt::reduce(m, rules), c);
        return r;
    }

    bool is_pure() const {
        for (const auto& [m, c] : terms_)
            if (!m.is_pure()) return false;
        return true;
    }
    bool is_symmetric() const { return *this == involution(); }

    /// Length of the longest tracial word involved (0 for constants and zero).
    int tracial_degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.tracial_degree());
        return d;
    }

    template <class F>
    TracePoly<F> map_coefficients() const {
        TracePoly<F> r;
        for (const auto& [m, c] : terms_) r.add_term(m, detail::coeff_to_field(c, (F*)nullptr));
        return r;
    }

    friend bool operator==(const TracePoly& a, const TracePoly& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const TracePoly& a, const TracePoly& b) { return !(a == b); }

private:
    Terms terms_;
};

template <class K>
std::string to_string(const TracePoly<K>& p) {
    if (p.is_zero()) return "0";
    std::string s;
    for (const auto& [m, c] : p.terms()) {
        std::string cs = detail::coeff_str(c);
        bool neg = !cs.empty() && cs[0] == '-';
        if (s.empty()) {
            if (neg) { s += "-"; cs = cs.substr(1); }
        } else {
            s += neg ? " - " : " + ";
            if (neg) cs = cs.substr(1);
        }
        if (m.is_constant()) {
            s += cs;
        } else if (cs == "1") {
            s += monomial_str(m);
        } else {
            s += cs + "*" + monomial_str(m);
        }
    }
    return s;
}

/// Evaluates f at a tuple of equally sized symmetric matrices over the field F
/// (one matrix per variable, 1-based). Trace factors evaluate to normalized
/// traces; a pure polynomial yields a scalar multiple of the identity.
template <class F, class K>
DenseMat<F> evaluate(const TracePoly<K>& f, const std::vector<DenseMat<F>>& A) {
    if (A.empty()) throw InputError("evaluate: empty matrix tuple");
    const int k = A[0].rows();
    for (const auto& M : A) {
        if (M.rows() != k || M.cols() != k) throw InputError("evaluate: matrices must be square and equally sized");
        if (!M.is_symmetric(1e-9)) throw InputError("evaluate: matrices must be symmetric");
    }

    std::unordered_map<Word, DenseMat<F>, WordHash> cache;
    auto eval_word = [&](const Word& w) -> const DenseMat<F>& {
        auto it = cache.find(w);
        if (it != cache.end()) return it->second;
        DenseMat<F> m = DenseMat<F>::identity(k);
        for (int c : w) {
            if (c < 1 || std::size_t(c) > A.size())
                throw InputError("evaluate: word references variable x" + std::to_string(c) +
                                 " outside the tuple of size " + std::to_string(A.size()));
            m = m * A[std::size_t(c) - 1];
        }
        return cache.emplace(w, std::move(m)).first->second;
    };

    DenseMat<F> out(k, k);
    for (const auto& [m, c] : f.terms()) {
        F scalar = detail::coeff_to_field(c, (F*)nullptr);
        for (const Word& fac : m.factors) scalar *= eval_word(fac).normalized_trace();
        const DenseMat<F>& tail = eval_word(m.tail);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) out.at(i, j) += scalar * tail.at(i, j);
    }
    return out;
}

/// Scalar value of a pure polynomial at a matrix tuple.
template <class F, class K>
F evaluate_pure(const TracePoly<K>& f, const std::vector<DenseMat<F>>& A) {
    if (!f.is_pure()) throw InputError("evaluate_pure: polynomial has a noncommutative part");
    return evaluate(f, A).at(0, 0);
}

} // namespace traceopt
