#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace traceopt {

/// A word in noncommuting symmetric letters, stored as 1-based variable
/// indices. The empty word is the monoid unit 1.
using Word = std::vector<int>;

inline int word_degree(const Word& w) { return int(w.size()); }

inline Word reversed(const Word& w) { return Word(w.rbegin(), w.rend()); }

inline Word concat(const Word& a, const Word& b) {
    Word r;
    r.reserve(a.size() + b.size());
    r.insert(r.end(), a.begin(), a.end());
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

/// Degree-lexicographic order: shorter words first, ties broken
/// lexicographically by letter index.
inline bool deglex_less(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Canonical representative of the star-cyclic class of `w`: the degree-lex
/// minimum over all rotations of w and all rotations of its reversal.
/// Trace symbols are indexed by these classes.
inline Word canonical_cyclic(const Word& w) {
    if (w.size() <= 1) return w;
    Word best = w;
    const Word rev = reversed(w);
    for (const Word* base : {&w, &rev}) {
        Word rot = *base;
        for (std::size_t i = 0; i < rot.size(); ++i) {
            std::rotate(rot.begin(), rot.begin() + 1, rot.end());
            if (std::lexicographical_compare(rot.begin(), rot.end(), best.begin(), best.end()))
                best = rot;
        }
    }
    return best;
}

inline std::string word_str(const Word& w) {
    if (w.empty()) return "1";
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += "*";
        s += "x" + std::to_string(w[i]);
    }
    return s;
}

struct WordHash {
    std::size_t operator()(const Word& w) const {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (int c : w) h = (h ^ std::size_t(c)) * 0x100000001b3ULL;
        return h;
    }
};

} // namespace traceopt
