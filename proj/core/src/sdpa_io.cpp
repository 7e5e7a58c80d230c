#include "traceopt/sdpa_io.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "traceopt/errors.hpp"

namespace traceopt {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void export_sdpa(const ConicProblem& p, std::ostream& out) {
    p.validate();
    const int neq = int(p.equalities.size());
    const int nblocks = int(p.blocks.size()) + (neq > 0 ? 1 : 0);

    if (neq > 0) out << "*EQ " << neq << "\n";
    out << p.m << "\n";
    out << nblocks << "\n";
    for (int b = 0; b < int(p.blocks.size()); ++b) {
        if (b) out << " ";
        out << p.blocks[std::size_t(b)].size;
    }
    if (neq > 0) out << (p.blocks.empty() ? "" : " ") << -(2 * neq);
    out << "\n";
    for (int k = 0; k < p.m; ++k) {
        if (k) out << " ";
        out << fmt17(p.c[std::size_t(k)]);
    }
    out << "\n";

    // Aggregate duplicate positions, then emit in deterministic order.
    // SDPA semantics: X = sum_k y_k F_k - F0, so the constant part flips sign.
    std::map<std::tuple<int, int, int, int>, double> agg;
    for (int b = 0; b < int(p.blocks.size()); ++b) {
        for (const BlockEntry& e : p.blocks[std::size_t(b)].entries) {
            int matno = e.var < 0 ? 0 : e.var + 1;
            double v = e.var < 0 ? -e.coeff : e.coeff;
            agg[{matno, b + 1, e.row + 1, e.col + 1}] += v;
        }
    }
    const int eqblk = int(p.blocks.size()) + 1;
    for (int i = 0; i < neq; ++i) {
        const LinearEq& eq = p.equalities[std::size_t(i)];
        int plus = 2 * i + 1, minus = 2 * i + 2;
        for (auto [k, a] : eq.coeffs) {
            agg[{k + 1, eqblk, plus, plus}] += a;
            agg[{k + 1, eqblk, minus, minus}] -= a;
        }
        agg[{0, eqblk, plus, plus}] += eq.rhs;
        agg[{0, eqblk, minus, minus}] -= eq.rhs;
    }
    for (const auto& [key, v] : agg) {
        if (v == 0.0) continue;
        auto [matno, blk, r, c] = key;
        out << matno << " " << blk << " " << r << " " << c << " " << fmt17(v) << "\n";
    }
}

std::string export_sdpa(const ConicProblem& p) {
    std::ostringstream ss;
    export_sdpa(p, ss);
    return ss.str();
}

ConicProblem import_sdpa(std::istream& in) {
    std::string line, data;
    int eq_count = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && (line[0] == '*' || line[0] == '"')) {
            if (line.rfind("*EQ", 0) == 0) eq_count = std::atoi(line.c_str() + 3);
            continue;
        }
        data += line;
        data += "\n";
    }
    // SDPA allows braces/parentheses/commas as separators in header lines.
    for (char& ch : data) {
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' || ch == '.' ||
            ch == 'e' || ch == 'E' || std::isspace(static_cast<unsigned char>(ch)))
            continue;
        ch = ' ';
    }
    std::istringstream ss(data);

    long long m = 0, nblocks = 0;
    if (!(ss >> m)) throw InputError("sdpa: missing variable count");
    if (!(ss >> nblocks)) throw InputError("sdpa: missing block count");
    if (m < 1 || nblocks < 1) throw InputError("sdpa: invalid header");
    std::vector<long long> sizes(static_cast<std::size_t>(nblocks));
    for (auto& s : sizes)
        if (!(ss >> s) || s == 0) throw InputError("sdpa: invalid block size list");

    ConicProblem p;
    p.m = int(m);
    p.c.resize(std::size_t(m));
    for (auto& v : p.c)
        if (!(ss >> v)) throw InputError("sdpa: objective vector too short");

    int eq_block = -1;
    if (eq_count > 0) {
        if (sizes.back() != -2LL * eq_count)
            throw InputError("sdpa: *EQ count does not match the final diagonal block");
        eq_block = int(nblocks) - 1;
        p.equalities.resize(std::size_t(eq_count));
    }
    for (int b = 0; b < int(nblocks); ++b) {
        if (b == eq_block) continue;
        Block blk;
        blk.size = int(std::abs(sizes[std::size_t(b)]));
        blk.name = sizes[std::size_t(b)] < 0 ? "diag" : "psd";
        p.blocks.push_back(std::move(blk));
    }

    long long matno, blk, i, j;
    double v;
    while (ss >> matno >> blk >> i >> j >> v) {
        if (matno < 0 || matno > m || blk < 1 || blk > nblocks) throw InputError("sdpa: entry out of range");
        int b = int(blk) - 1;
        if (b == eq_block) {
            if (i != j) throw InputError("sdpa: equality block entries must be diagonal");
            int slot = int(i) - 1;
            int pair = slot / 2;
            bool plus = (slot % 2) == 0;
            if (pair >= eq_count) throw InputError("sdpa: equality slot out of range");
            if (!plus) continue; // the mirrored negative row repeats the data
            LinearEq& eq = p.equalities[std::size_t(pair)];
            if (matno == 0)
                eq.rhs += v;
            else
                eq.coeffs.emplace_back(int(matno) - 1, v);
            continue;
        }
        Block& dst = p.blocks[std::size_t(b)];
        BlockEntry e;
        e.row = int(std::min(i, j)) - 1;
        e.col = int(std::max(i, j)) - 1;
        if (e.row < 0 || e.col >= dst.size) throw InputError("sdpa: entry position out of block range");
        if (sizes[std::size_t(blk - 1)] < 0 && i != j)
            throw InputError("sdpa: off-diagonal entry in a diagonal block");
        e.var = int(matno) - 1;          // matno 0 becomes the constant part
        e.coeff = matno == 0 ? -v : v;   // undo the SDPA constant sign flip
        dst.entries.push_back(e);
    }
    p.validate();
    return p;
}

ConicProblem import_sdpa_string(const std::string& text) {
    std::istringstream ss(text);
    return import_sdpa(ss);
}

} // namespace traceopt
