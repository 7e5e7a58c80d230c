#include "traceopt/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "traceopt/errors.hpp"
#include "traceopt/parser.hpp"

namespace traceopt {

std::string to_string(TermKind k) {
    switch (k) {
        case TermKind::hermitian_square: return "hermitian-square";
        case TermKind::pure_square: return "pure-square";
        case TermKind::bound_square: return "bound-square";
        case TermKind::trace_square: return "trace-square";
        case TermKind::equality_row: return "equality-row";
    }
    return "?";
}

namespace detail {
double coeff_abs(double x) { return std::abs(x); }
Rational coeff_abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
} // namespace detail

namespace {

std::string num_str(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
std::string num_str(const Rational& q) { return q.get_str(); }

TermKind kind_for_block(BlockInfo::Kind k) {
    switch (k) {
        case BlockInfo::Kind::moment: return TermKind::hermitian_square;
        case BlockInfo::Kind::pure_localizer: return TermKind::pure_square;
        case BlockInfo::Kind::bound_pure: return TermKind::bound_square;
        case BlockInfo::Kind::trace_localizer: return TermKind::trace_square;
        case BlockInfo::Kind::bound_trace: return TermKind::trace_square;
    }
    throw Error("internal: unhandled block kind");
}

template <class K>
void fill_common(CertTerm<K>& t, const BlockInfo& bi) {
    t.kind = kind_for_block(bi.kind);
    t.multiplier = bi.multiplier;
    t.constraint_index = bi.constraint_index;
    t.variable = bi.variable;
    t.power = bi.power;
}

template <class K, class Conv>
TracePoly<K> row_poly(const AssembledRelaxation& relax, const LinearEq& eq, Conv conv) {
    TracePoly<K> p;
    for (const auto& [var, coeff] : eq.coeffs)
        p.add_term(relax.dictionary.entries[std::size_t(var)], conv(coeff));
    return p;
}

template <class K, class Conv>
void append_equality_terms(Certificate<K>& cert, const AssembledRelaxation& relax, const SolveResult& result,
                           Conv conv) {
    if (result.eq_duals.size() != relax.conic.equalities.size())
        throw InputError("certificate extraction: equality multipliers missing from the solution");
    for (std::size_t q = 1; q < relax.conic.equalities.size(); ++q) {
        CertTerm<K> t;
        t.kind = TermKind::equality_row;
        t.weight = conv(result.eq_duals[q]);
        t.g = row_poly<K, Conv>(relax, relax.conic.equalities[q], conv);
        t.multiplier = TracePoly<Rational>::constant(1);
        cert.terms.push_back(std::move(t));
    }
}

} // namespace

Certificate<double> extract_certificate(const AssembledRelaxation& relax, const SolveResult& result,
                                        const CertificateSettings& st) {
    if (!result.ok())
        throw InputError("certificate extraction requires an optimal solve; solver reported " +
                         to_string(result.status));
    if (result.Z.size() != relax.conic.blocks.size())
        throw InputError("certificate extraction: dual blocks missing from the solution");

    Certificate<double> cert;
    cert.spec = relax.spec;
    cert.d = relax.d;
    cert.negated = relax.negated;
    cert.bound = result.dual_obj;

    for (std::size_t b = 0; b < relax.info.size(); ++b) {
        const BlockInfo& bi = relax.info[b];
        Eigen::MatrixXd Z = 0.5 * (result.Z[b] + result.Z[b].transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z);
        for (int i = 0; i < Z.rows(); ++i) {
            const double ev = es.eigenvalues()(i);
            if (ev < -100.0 * st.clip_tol)
                throw NumericalError("dual Gram block '" + bi.name + "' is indefinite: eigenvalue " +
                                     num_str(ev) + " below the clipping range");
            if (ev <= 0.0) continue;
            CertTerm<double> t;
            fill_common(t, bi);
            t.weight = ev;
            for (int r = 0; r < Z.rows(); ++r)
                t.g.add_term(bi.row_basis[std::size_t(r)], es.eigenvectors()(r, i));
            cert.terms.push_back(std::move(t));
        }
    }
    append_equality_terms(cert, relax, result, [](double x) { return x; });
    return cert;
}

Certificate<Rational> rationalize_certificate(const AssembledRelaxation& relax, const SolveResult& result,
                                              const CertificateSettings& st) {
    if (!result.ok())
        throw InputError("certificate extraction requires an optimal solve; solver reported " +
                         to_string(result.status));
    if (result.Z.size() != relax.conic.blocks.size())
        throw InputError("certificate extraction: dual blocks missing from the solution");

    Certificate<Rational> cert;
    cert.spec = relax.spec;
    cert.d = relax.d;
    cert.negated = relax.negated;
    cert.bound = rationalize(result.dual_obj, st.denom_bound);

    for (std::size_t b = 0; b < relax.info.size(); ++b) {
        const BlockInfo& bi = relax.info[b];
        const int sz = int(bi.row_basis.size());
        std::vector<std::vector<Rational>> W(std::size_t(sz), std::vector<Rational>(std::size_t(sz), 0));
        for (int i = 0; i < sz; ++i)
            for (int j = i; j < sz; ++j) {
                Rational v = rationalize(0.5 * (result.Z[b](i, j) + result.Z[b](j, i)), st.denom_bound);
                W[std::size_t(i)][std::size_t(j)] = v;
                W[std::size_t(j)][std::size_t(i)] = v;
            }

        // Peel positive pivots: W stays symmetric; each step removes d*l*l^T
        // with l normalized at the pivot. Only the positive-semidefinite part
        // survives; the (tiny) indefinite remainder is dropped and will show
        // up in the verification residual.
        for (int step = 0; step < sz; ++step) {
            int p = -1;
            for (int i = 0; i < sz; ++i)
                if (W[std::size_t(i)][std::size_t(i)] > 0 &&
                    (p < 0 || W[std::size_t(i)][std::size_t(i)] > W[std::size_t(p)][std::size_t(p)]))
                    p = i;
            if (p < 0) break;
            const Rational d = W[std::size_t(p)][std::size_t(p)];
            std::vector<Rational> l(static_cast<std::size_t>(sz));
            for (int i = 0; i < sz; ++i) l[std::size_t(i)] = W[std::size_t(i)][std::size_t(p)] / d;
            for (int i = 0; i < sz; ++i)
                for (int j = 0; j < sz; ++j)
                    W[std::size_t(i)][std::size_t(j)] -= d * l[std::size_t(i)] * l[std::size_t(j)];
            CertTerm<Rational> t;
            fill_common(t, bi);
            t.weight = d;
            for (int r = 0; r < sz; ++r) t.g.add_term(bi.row_basis[std::size_t(r)], l[std::size_t(r)]);
            cert.terms.push_back(std::move(t));
        }
    }
    append_equality_terms(cert, relax, result,
                          [&st](double x) { return rationalize(x, st.denom_bound); });
    return cert;
}

namespace {

template <class K>
void write_certificate_impl(std::ostream& os, const Certificate<K>& cert) {
    os << "traceopt-certificate v1\n";
    os << "field " << (std::is_same_v<K, double> ? "float" : "exact") << "\n";
    os << "vars " << cert.spec.n << "\n";
    os << "sense " << (cert.spec.sense == Sense::maximize ? "maximize" : "minimize") << "\n";
    os << "negated " << (cert.negated ? 1 : 0) << "\n";
    os << "order " << cert.d << "\n";
    os << "bound " << num_str(cert.bound) << "\n";
    os << "objective " << to_string(cert.spec.objective) << "\n";
    RuleSet rules = compile_rules(cert.spec);
    for (int j = 1; j <= cert.spec.n; ++j) {
        RuleKind k = rules.rule_for(j);
        if (k == RuleKind::projection) os << "rule x" << j << " projection\n";
        if (k == RuleKind::involution) os << "rule x" << j << " involution\n";
    }
    for (const CertTerm<K>& t : cert.terms) {
        os << "term " << to_string(t.kind) << "\n";
        os << "weight " << num_str(t.weight) << "\n";
        os << "meta " << t.constraint_index << " " << t.variable << " " << t.power << "\n";
        os << "g " << to_string(t.g) << "\n";
        os << "s " << to_string(t.multiplier) << "\n";
        os << "end\n";
    }
}

} // namespace

void write_certificate(std::ostream& os, const Certificate<double>& cert) { write_certificate_impl(os, cert); }
void write_certificate(std::ostream& os, const Certificate<Rational>& cert) { write_certificate_impl(os, cert); }

Certificate<Rational> read_certificate(std::istream& is) {
    Certificate<Rational> cert;
    cert.spec.n = 0;
    cert.spec.name = "certificate";
    std::string line;
    int lineno = 0;
    auto bad = [&](const std::string& msg) -> void {
        throw InputError("certificate line " + std::to_string(lineno) + ": " + msg);
    };
    bool saw_header = false;
    CertTerm<Rational> term;
    bool in_term = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string rest;
        std::getline(ls, rest);
        if (auto a = rest.find_first_not_of(" \t"); a != std::string::npos)
            rest = rest.substr(a);
        else
            rest.clear();
        if (!saw_header) {
            if (key != "traceopt-certificate") bad("missing certificate header");
            saw_header = true;
            continue;
        }
        if (key == "field") {
            if (rest != "float" && rest != "exact") bad("field must be float or exact");
        } else if (key == "vars") {
            cert.spec.n = std::stoi(rest);
        } else if (key == "sense") {
            cert.spec.sense = (rest == "maximize") ? Sense::maximize : Sense::minimize;
        } else if (key == "negated") {
            cert.negated = (rest == "1");
        } else if (key == "order") {
            cert.d = std::stoi(rest);
        } else if (key == "bound") {
            cert.bound = parse_scalar(rest);
        } else if (key == "objective") {
            cert.spec.objective = parse_trace_poly(rest, cert.spec.n);
        } else if (key == "rule") {
            std::istringstream rs(rest);
            std::string var, kind;
            rs >> var >> kind;
            if (var.size() < 2 || var[0] != 'x') bad("rule expects a variable like x1");
            int j = std::stoi(var.substr(1));
            if (kind == "projection")
                cert.spec.constraints.push_back({ConstraintKind::projection_var, {}, j});
            else if (kind == "involution")
                cert.spec.constraints.push_back({ConstraintKind::involution_var, {}, j});
            else
                bad("rule kind must be projection or involution");
        } else if (key == "term") {
            if (in_term) bad("nested term");
            in_term = true;
            term = CertTerm<Rational>{};
            if (rest == "hermitian-square")
                term.kind = TermKind::hermitian_square;
            else if (rest == "pure-square")
                term.kind = TermKind::pure_square;
            else if (rest == "bound-square")
                term.kind = TermKind::bound_square;
            else if (rest == "trace-square")
                term.kind = TermKind::trace_square;
            else if (rest == "equality-row")
                term.kind = TermKind::equality_row;
            else
                bad("unknown term kind '" + rest + "'");
        } else if (key == "weight") {
            if (!in_term) bad("weight outside a term");
            term.weight = parse_scalar(rest);
        } else if (key == "meta") {
            if (!in_term) bad("meta outside a term");
            std::istringstream ms(rest);
            ms >> term.constraint_index >> term.variable >> term.power;
        } else if (key == "g") {
            if (!in_term) bad("g outside a term");
            term.g = parse_trace_poly(rest, cert.spec.n);
        } else if (key == "s") {
            if (!in_term) bad("s outside a term");
            term.multiplier = parse_trace_poly(rest, cert.spec.n);
        } else if (key == "end") {
            if (!in_term) bad("end outside a term");
            in_term = false;
            cert.terms.push_back(std::move(term));
        } else {
            bad("unknown directive '" + key + "'");
        }
    }
    if (!saw_header) throw InputError("certificate: empty input");
    if (in_term) throw InputError("certificate: unterminated term");
    if (cert.spec.n < 1) throw InputError("certificate: missing vars");
    if (cert.spec.objective.is_zero()) throw InputError("certificate: missing objective");
    return cert;
}

Certificate<double> certificate_to_double(const Certificate<Rational>& cert) {
    Certificate<double> out;
    out.spec = cert.spec;
    out.d = cert.d;
    out.negated = cert.negated;
    out.bound = to_double(cert.bound);
    out.terms.reserve(cert.terms.size());
    for (const CertTerm<Rational>& t : cert.terms) {
        CertTerm<double> s;
        s.kind = t.kind;
        s.weight = to_double(t.weight);
        s.g = t.g.map_coefficients<double>();
        s.multiplier = t.multiplier;
        s.constraint_index = t.constraint_index;
        s.variable = t.variable;
        s.power = t.power;
        out.terms.push_back(std::move(s));
    }
    return out;
}

UnivariateSplit univariate_split(const Rational& eps) {
    if (eps <= 0) throw InputError("univariate_split: eps must be positive");
    UnivariateSplit out;
    out.eps = eps;
    const Rational inv = 1 / eps;
    mpz_class n_z;
    mpz_cdiv_q(n_z.get_mpz_t(), inv.get_num().get_mpz_t(), inv.get_den().get_mpz_t());
    if (n_z > 256) throw InputError("univariate_split: eps too small, split degree would exceed 512");
    out.n = int(n_z.get_si());
    if (out.n < 1) out.n = 1;

    // s2 = (eps/2) (t - 1)^(2n)
    const int deg = 2 * out.n;
    out.s2.assign(std::size_t(deg) + 1, 0);
    const Rational half_eps = eps / 2;
    for (int i = 0; i <= deg; ++i) {
        mpz_class binom;
        mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(deg), static_cast<unsigned long>(i));
        Rational c = half_eps * Rational(binom);
        if ((deg - i) % 2 == 1) c = -c;
        out.s2[std::size_t(i)] = c;
    }
    out.s1 = out.s2;
    out.s1[1] += 1;

    // Two-square decomposition of s1 via complex roots: s1 has no real roots,
    // so its roots split into conjugate pairs; the product over one root per
    // pair, scaled by sqrt of the leading coefficient, gives p + i q with
    // s1 = p^2 + q^2.
    const int m = deg;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(m, m);
    const double lead = to_double(out.s1[std::size_t(m)]);
    for (int i = 0; i < m - 1; ++i) comp(i + 1, i) = 1.0;
    for (int i = 0; i < m; ++i) comp(i, m - 1) = -to_double(out.s1[std::size_t(i)]) / lead;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
    std::vector<std::complex<double>> upper;
    for (int i = 0; i < m; ++i) {
        std::complex<double> z(es.eigenvalues()(i).real(), es.eigenvalues()(i).imag());
        if (std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z)))
            throw NumericalError("univariate_split: near-real root of s1; no two-square decomposition");
        if (z.imag() > 0) upper.push_back(z);
    }
    if (int(upper.size()) != out.n)
        throw NumericalError("univariate_split: conjugate root pairing failed");
    std::sort(upper.begin(), upper.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<std::complex<double>> f{1.0};
    for (const auto& z : upper) {
        std::vector<std::complex<double>> next(f.size() + 1, 0.0);
        for (std::size_t i = 0; i < f.size(); ++i) {
            next[i + 1] += f[i];
            next[i] -= f[i] * z;
        }
        f = std::move(next);
    }
    const double scale = std::sqrt(lead);
    std::vector<double> p(f.size()), q(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        p[i] = scale * f[i].real();
        q[i] = scale * f[i].imag();
    }
    out.sos = {std::move(p), std::move(q)};
    return out;
}

Rational eval_poly(const std::vector<Rational>& coeffs, const Rational& t) {
    Rational v = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * t + *it;
    return v;
}

TracePoly<Rational> substitute_poly(const std::vector<Rational>& coeffs, const TracePoly<Rational>& a) {
    TracePoly<Rational> v;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        v = v * a + TracePoly<Rational>::constant(*it);
    return v;
}

PositivityCheck verify_operator_positivity(const TracePoly<Rational>& a, const ProblemSpec& spec, int d,
                                           const Rational& eps, const RelaxationOptions& options,
                                           const SolverSettings& solver_settings) {
    if (!a.is_symmetric())
        throw InputError("operator positivity check requires a symmetric trace polynomial");
    UnivariateSplit split = univariate_split(eps);
    ProblemSpec p2 = spec;
    p2.sense = Sense::minimize;
    p2.objective =
        TracePoly<Rational>::constant(eps) - substitute_poly(split.s2, a).universal_trace();
    p2.name = spec.name.empty() ? "positivity" : spec.name + ":positivity";

    PositivityCheck out;
    out.eps = eps;
    out.order = d;
    out.objective_degree = p2.objective.tracial_degree();

    AssembledRelaxation relax = build_general_relaxation(p2, d, options);
    SolveResult res = solve(relax.conic, solver_settings);
    out.status = res.status;
    out.bound = res.dual_obj;
    out.positive = res.ok() && res.dual_obj >= 0.0;
    return out;
}

} // namespace traceopt
