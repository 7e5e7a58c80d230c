#include "traceopt/gns.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <utility>

#include <Eigen/Dense>

#include <json.hpp>

#include "traceopt/errors.hpp"
#include "traceopt/hankel.hpp"

namespace traceopt {

double MomentFunctional::value(const TraceMonomial& m) const {
    TraceMonomial label = reduce(m, rules);
    int idx = dictionary.find(label);
    if (idx < 0)
        throw InputError("moment functional has no value for " + monomial_str(label) +
                         " (degree budget is " + std::to_string(2 * order) + ")");
    return values[std::size_t(idx)];
}

double MomentFunctional::value(const TracePoly<Rational>& f) const {
    if (!f.is_pure()) throw InputError("moment functional applied to a polynomial with a noncommutative part");
    double v = 0.0;
    for (const auto& [m, c] : f.terms()) v += to_double(c) * value(m);
    return v;
}

Eigen::MatrixXd MomentFunctional::hankel(int k) const {
    if (k < 0 || k > order) throw InputError("hankel order outside the stored degree budget");
    const int p = word_basis.prefix_size(k);
    Eigen::MatrixXd M(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            double v = value(hankel_entry_label(word_basis.entries[std::size_t(i)],
                                                word_basis.entries[std::size_t(j)], rules));
            M(i, j) = v;
            M(j, i) = v;
        }
    return M;
}

MomentFunctional functional_from_solution(const AssembledRelaxation& relax, const SolveResult& result) {
    if (int(result.y.size()) != relax.conic.m)
        throw InputError("functional_from_solution: moment vector length does not match the relaxation");
    MomentFunctional L;
    L.n = relax.spec.n;
    L.order = relax.d;
    L.rules = relax.rules;
    L.dictionary = relax.dictionary;
    L.word_basis = enumerate_basis(L.n, L.order, L.rules, /*pure_only=*/false, relax.options.basis_cap);
    L.values = result.y;
    return L;
}

MomentFunctional functional_from_evaluation(const std::vector<DenseMat<double>>& A, int n, int order,
                                            const RuleSet& rules) {
    if (int(A.size()) != n) throw InputError("functional_from_evaluation: expected one matrix per variable");
    MomentFunctional L;
    L.n = n;
    L.order = order;
    L.rules = rules;
    L.dictionary = enumerate_basis(n, 2 * order, rules, /*pure_only=*/true);
    L.word_basis = enumerate_basis(n, order, rules, /*pure_only=*/false);
    L.values = evaluation_functional<double>(A, L.dictionary);
    return L;
}

FlatnessReport check_flatness(const MomentFunctional& L, int d, int delta, double rank_tol) {
    if (d < 0 || delta < 0 || d + delta > L.order)
        throw InputError("check_flatness: orders exceed the stored degree budget");
    FlatnessReport rep;
    Eigen::MatrixXd M = L.hankel(d + delta);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    rep.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    rep.threshold = rank_tol * rep.sigma_max;
    rep.rank_full = int((sv.array() > rep.threshold).count());
    const int p = L.word_basis.prefix_size(d);
    Eigen::BDCSVD<Eigen::MatrixXd> svd_low(M.topLeftCorner(p, p));
    rep.rank_low = int((svd_low.singularValues().array() > rep.threshold).count());
    rep.flat = (rep.rank_full == rep.rank_low);
    return rep;
}

namespace {

Eigen::MatrixXd unvec_sym(const Eigen::VectorXd& packed, int r) {
    Eigen::MatrixXd X(r, r);
    int k = 0;
    for (int a = 0; a < r; ++a)
        for (int b = a; b < r; ++b) {
            X(a, b) = packed(k);
            X(b, a) = packed(k);
            ++k;
        }
    return X;
}

struct Splitter {
    const GnsSettings& st;
    std::mt19937 rng{0x7ace0057u};

    BlockDiagonalization run(const std::vector<Eigen::MatrixXd>& A, int depth) {
        const int r = int(A.front().rows());
        BlockDiagonalization out;
        out.Q = Eigen::MatrixXd::Identity(r, r);
        out.block_sizes = {r};
        if (r <= 1 || depth > 64) return out;

        // Basis of the symmetric part of the commutant of the generated
        // algebra: symmetric X with A_i X = X A_i for every i.
        const int s = r * (r + 1) / 2;
        Eigen::MatrixXd K(int(A.size()) * r * r, s);
        {
            int col = 0;
            for (int a = 0; a < r; ++a)
                for (int b = a; b < r; ++b) {
                    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(r, r);
                    E(a, b) = 1.0;
                    E(b, a) = 1.0;
                    for (int i = 0; i < int(A.size()); ++i) {
                        Eigen::MatrixXd comm = A[std::size_t(i)] * E - E * A[std::size_t(i)];
                        K.block(i * r * r, col, r * r, 1) =
                            Eigen::Map<Eigen::VectorXd>(comm.data(), r * r);
                    }
                    ++col;
                }
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double thr = st.commutant_tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
        int null_dim = 0;
        for (int i = int(sv.size()) - 1; i >= 0 && sv(i) <= thr; --i) ++null_dim;
        null_dim += s - int(sv.size()); // columns beyond the computed spectrum, if any
        if (null_dim <= 1) return out;  // symmetric commutant is scalar: irreducible

        double scale = 1.0;
        for (const auto& Ai : A) scale = std::max(scale, Ai.cwiseAbs().maxCoeff());
        std::normal_distribution<double> gauss(0.0, 1.0);

        for (int attempt = 0; attempt < st.max_retries; ++attempt) {
            Eigen::MatrixXd X = Eigen::MatrixXd::Zero(r, r);
            for (int l = 0; l < null_dim; ++l)
                X += gauss(rng) * unvec_sym(svd.matrixV().col(int(svd.matrixV().cols()) - 1 - l), r);
            X = 0.5 * (X + X.transpose()).eval();

            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X);
            const Eigen::VectorXd lam = es.eigenvalues();
            const double spread = lam(r - 1) - lam(0);
            if (spread <= 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff())) continue;

            std::vector<int> sizes;
            int run_len = 1;
            const double gap_thr = st.cluster_gap * std::max(1.0, spread);
            for (int i = 1; i < r; ++i) {
                if (lam(i) - lam(i - 1) > gap_thr) {
                    sizes.push_back(run_len);
                    run_len = 1;
                } else {
                    ++run_len;
                }
            }
            sizes.push_back(run_len);
            if (int(sizes.size()) <= 1) continue;

            // Verify the candidate partition really decouples every A_i.
            const Eigen::MatrixXd& Qx = es.eigenvectors();
            std::vector<Eigen::MatrixXd> B;
            B.reserve(A.size());
            for (const auto& Ai : A) B.push_back(Qx.transpose() * Ai * Qx);
            const double off_tol = 10.0 * st.asym_tol * scale;
            bool clean = true;
            for (const auto& Bi : B) {
                int off = 0;
                for (int bsz : sizes) {
                    double leak_r = Bi.block(off, 0, bsz, off).cwiseAbs().maxCoeff();
                    double leak_c = 0.0;
                    if (off + bsz < r)
                        leak_c = Bi.block(off, off + bsz, bsz, r - off - bsz).cwiseAbs().maxCoeff();
                    if (off == 0) leak_r = 0.0;
                    if (std::max(leak_r, leak_c) > off_tol) {
                        clean = false;
                        break;
                    }
                    off += bsz;
                }
                if (!clean) break;
            }
            if (!clean) continue;

            // Recurse into each sub-block and stitch the transformations.
            Eigen::MatrixXd Q = Qx;
            std::vector<int> final_sizes;
            int off = 0;
            for (int bsz : sizes) {
                std::vector<Eigen::MatrixXd> sub;
                sub.reserve(B.size());
                for (const auto& Bi : B) {
                    Eigen::MatrixXd blockm = Bi.block(off, off, bsz, bsz);
                    sub.push_back(0.5 * (blockm + blockm.transpose()));
                }
                BlockDiagonalization rec = run(sub, depth + 1);
                Q.middleCols(off, bsz) = (Q.middleCols(off, bsz) * rec.Q).eval();
                for (int sz : rec.block_sizes) final_sizes.push_back(sz);
                off += bsz;
            }
            out.Q = Q;
            out.block_sizes = std::move(final_sizes);
            return out;
        }
        return out; // retries exhausted: keep the coarser (single) block
    }
};

Eigen::MatrixXd right_triangular_solve(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& C_upper) {
    // Returns Y * C_upper^{-1}.
    return C_upper.transpose().triangularView<Eigen::Lower>().solve(Y.transpose()).transpose();
}

} // namespace

BlockDiagonalization block_diagonalize(const std::vector<Eigen::MatrixXd>& A, const GnsSettings& settings) {
    if (A.empty()) throw InputError("block_diagonalize: empty matrix tuple");
    const auto r = A.front().rows();
    for (const auto& Ai : A)
        if (Ai.rows() != r || Ai.cols() != r)
            throw InputError("block_diagonalize: matrices must be square of equal size");
    Splitter sp{settings, {}};
    return sp.run(A, 0);
}

Minimizer pure_trace_gns(const MomentFunctional& L, int d, int delta, const GnsSettings& st) {
    if (delta < 1) throw InputError("pure_trace_gns: delta must be at least 1");
    if (d < 0 || d + delta > L.order)
        throw InputError("pure_trace_gns: d + delta exceeds the stored degree budget");
    const int D = d + delta;

    Minimizer out;
    out.flatness = check_flatness(L, d, delta, st.rank_tol);
    out.flat = out.flatness.flat;
    if (!out.flat)
        out.warning = "functional is not numerically flat (rank " + std::to_string(out.flatness.rank_low) +
                      " at order " + std::to_string(d) + " vs " + std::to_string(out.flatness.rank_full) +
                      " at order " + std::to_string(D) + "); proceeding anyway";

    const Eigen::MatrixXd M = L.hankel(D);
    const int szD = int(M.rows());
    const int p_d = L.word_basis.prefix_size(d);
    const double theta = std::max(out.flatness.threshold, 1e-300);

    // Greedy pivoted column selection among degree-<= d words, constant first.
    std::vector<int> cols;
    Eigen::MatrixXd U(szD, 0);
    auto try_add = [&](int c) -> bool {
        Eigen::VectorXd v = M.col(c);
        for (int pass = 0; pass < 2; ++pass)
            if (U.cols() > 0) v -= U * (U.transpose() * v);
        const double nv = v.norm();
        if (nv <= theta) return false;
        U.conservativeResize(Eigen::NoChange, U.cols() + 1);
        U.col(U.cols() - 1) = v / nv;
        cols.push_back(c);
        return true;
    };
    if (!try_add(0)) throw NumericalError("pure_trace_gns: the constant column is numerically zero");
    {
        std::vector<int> cand;
        for (int c = 1; c < p_d; ++c) cand.push_back(c);
        std::stable_sort(cand.begin(), cand.end(),
                         [&](int a, int b) { return M.col(a).norm() > M.col(b).norm(); });
        for (int c : cand) try_add(c);
    }
    const int r = int(cols.size());

    Eigen::MatrixXd Mhat(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) Mhat(i, j) = M(cols[std::size_t(i)], cols[std::size_t(j)]);
    Eigen::LLT<Eigen::MatrixXd> llt(Mhat);
    if (llt.info() != Eigen::Success)
        throw NumericalError("pure_trace_gns: principal moment submatrix is not positive definite; "
                             "raise rank_tol or solve to higher accuracy");
    const Eigen::MatrixXd C = llt.matrixU();

    Eigen::MatrixXd Cfull(szD, r);
    for (int j = 0; j < r; ++j) Cfull.col(j) = M.col(cols[std::size_t(j)]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Cfull);

    auto column_of = [&](const TraceMonomial& m) -> int {
        int idx = L.word_basis.find(reduce(m, L.rules));
        if (idx < 0 || idx >= szD)
            throw Error("internal: multiplication column " + monomial_str(m) + " missing from the word basis");
        return idx;
    };
    auto conjugated_operator = [&](const TraceMonomial& g) -> Eigen::MatrixXd {
        Eigen::MatrixXd Cg(szD, r);
        for (int j = 0; j < r; ++j)
            Cg.col(j) = M.col(column_of(mul(g, L.word_basis.entries[std::size_t(cols[std::size_t(j)])])));
        Eigen::MatrixXd bar = cod.solve(Cg);
        return right_triangular_solve(C * bar, C);
    };

    std::vector<Eigen::MatrixXd> A;
    A.reserve(std::size_t(L.n));
    for (int i = 1; i <= L.n; ++i) {
        Eigen::MatrixXd Ai = conjugated_operator(TraceMonomial::from_word({i}));
        const double scale = std::max(1.0, Ai.cwiseAbs().maxCoeff());
        const double asym = (Ai - Ai.transpose()).cwiseAbs().maxCoeff() / scale;
        if (asym > st.asym_tol)
            throw NumericalError("pure_trace_gns: multiplication operator for x" + std::to_string(i) +
                                 " is asymmetric by " + std::to_string(asym) +
                                 "; the functional is too far from a flat tracial one");
        A.push_back(0.5 * (Ai + Ai.transpose()).eval());
    }

    const Eigen::VectorXd v = C.col(0); // C e_1: representation of the constant word

    BlockDiagonalization bd = block_diagonalize(A, st);
    const Eigen::VectorXd vq = bd.Q.transpose() * v;
    std::vector<Eigen::MatrixXd> At;
    At.reserve(A.size());
    for (const auto& Ai : A) At.push_back(bd.Q.transpose() * Ai * bd.Q);

    // The pure-trace action must be scalar on every component: multiplication
    // by each single-trace class of degree <= delta.
    for (const TraceMonomial& g : L.dictionary.entries) {
        if (g.factors.size() != 1 || !g.tail.empty() || g.tracial_degree() > delta) continue;
        Eigen::MatrixXd P = conjugated_operator(g);
        P = 0.5 * (P + P.transpose()).eval();
        Eigen::MatrixXd PQ = bd.Q.transpose() * P * bd.Q;
        int off = 0;
        for (int bsz : bd.block_sizes) {
            Eigen::MatrixXd Pb = PQ.block(off, off, bsz, bsz);
            const double mean = Pb.trace() / bsz;
            Pb.diagonal().array() -= mean;
            if (Pb.cwiseAbs().maxCoeff() > st.scalar_tol)
                throw NumericalError("pure_trace_gns: extraction inapplicable; multiplication by " +
                                     monomial_str(g) + " deviates from a scalar by " +
                                     std::to_string(Pb.cwiseAbs().maxCoeff()) + " on a component");
            off += bsz;
        }
    }

    int off = 0;
    for (int bsz : bd.block_sizes) {
        MinimizerComponent comp;
        comp.weight = vq.segment(off, bsz).squaredNorm();
        comp.matrices.reserve(At.size());
        for (const auto& Ai : At) {
            Eigen::MatrixXd blockm = Ai.block(off, off, bsz, bsz);
            comp.matrices.push_back(0.5 * (blockm + blockm.transpose()));
        }
        out.components.push_back(std::move(comp));
        off += bsz;
    }

    // The splitter returns irreducible blocks, so a simple summand of
    // multiplicity m shows up as m unitarily equivalent copies. Fold those
    // copies into a single component carrying their combined trace mass, as
    // the Wedderburn decomposition of the underlying algebra does. Between
    // irreducible blocks, any nonzero intertwiner certifies equivalence.
    auto equivalent_blocks = [&](const std::vector<Eigen::MatrixXd>& X,
                                 const std::vector<Eigen::MatrixXd>& Y) -> bool {
        const int b = int(X.front().rows());
        if (int(Y.front().rows()) != b) return false;
        Eigen::MatrixXd K(int(X.size()) * b * b, b * b);
        int col = 0;
        for (int cb = 0; cb < b; ++cb)
            for (int rb = 0; rb < b; ++rb) {
                Eigen::MatrixXd E = Eigen::MatrixXd::Zero(b, b);
                E(rb, cb) = 1.0;
                for (int i = 0; i < int(X.size()); ++i) {
                    Eigen::MatrixXd syl = X[std::size_t(i)] * E - E * Y[std::size_t(i)];
                    K.block(i * b * b, col, b * b, 1) = Eigen::Map<Eigen::VectorXd>(syl.data(), b * b);
                }
                ++col;
            }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
        const auto& sv = svd.singularValues();
        const double top = sv.size() > 0 ? sv(0) : 0.0;
        return sv(sv.size() - 1) <= st.commutant_tol * std::max(1.0, top);
    };
    std::vector<MinimizerComponent> merged;
    for (MinimizerComponent& comp : out.components) {
        bool folded = false;
        for (MinimizerComponent& kept : merged)
            if (equivalent_blocks(kept.matrices, comp.matrices)) {
                kept.weight += comp.weight;
                folded = true;
                break;
            }
        if (!folded) merged.push_back(std::move(comp));
    }
    out.components = std::move(merged);
    out.rank = r;
    return out;
}

namespace {

DenseMat<double> dense_from_eigen(const Eigen::MatrixXd& M) {
    DenseMat<double> out(int(M.rows()), int(M.cols()));
    for (int i = 0; i < int(M.rows()); ++i)
        for (int j = 0; j < int(M.cols()); ++j) out.at(i, j) = M(i, j);
    return out;
}

Eigen::MatrixXd eigen_from_dense(const DenseMat<double>& M) {
    Eigen::MatrixXd out(M.rows(), M.cols());
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) out(i, j) = M.at(i, j);
    return out;
}

} // namespace

bool MinimizerReport::ok(double tol) const {
    return std::abs(sum_weights - 1.0) <= tol && max_moment_residual <= tol && constraint_floor >= -tol &&
           max_equality_residual <= tol && max_tag_residual <= tol &&
           std::abs(objective_mixture - objective_functional) <= tol;
}

MinimizerReport validate_minimizer(const Minimizer& m, const ProblemSpec& spec, const MomentFunctional& L) {
    MinimizerReport rep;
    std::vector<std::vector<DenseMat<double>>> tuples;
    tuples.reserve(m.components.size());
    for (const MinimizerComponent& comp : m.components) {
        rep.sum_weights += comp.weight;
        std::vector<DenseMat<double>> t;
        t.reserve(comp.matrices.size());
        for (const auto& Ai : comp.matrices) t.push_back(dense_from_eigen(Ai));
        tuples.push_back(std::move(t));
    }

    // The minimizer realizes the tracial state tau(w) = sum_j w_j Tr(w(A^(j)))
    // on words; a pure monomial tr(u_1)...tr(u_k) evaluates as the product
    // tau(u_1)...tau(u_k), not as a per-component mixture of whole monomials.
    std::map<Word, double> trace_cache;
    auto mixed_trace = [&](const Word& w) {
        if (auto it = trace_cache.find(w); it != trace_cache.end()) return it->second;
        TracePoly<Rational> tw = TracePoly<Rational>::trace_word(w);
        double v = 0.0;
        for (std::size_t j = 0; j < tuples.size(); ++j)
            v += m.components[j].weight * evaluate_pure<double>(tw, tuples[j]);
        trace_cache.emplace(w, v);
        return v;
    };
    auto mixture_value = [&](const TracePoly<Rational>& f) {
        if (!f.is_pure())
            throw InputError("validate_minimizer: objective must be a pure trace polynomial");
        double v = 0.0;
        for (const auto& [mono, c] : f.terms()) {
            double term = to_double(c);
            for (const Word& w : mono.factors) term *= mixed_trace(w);
            v += term;
        }
        return v;
    };

    for (int k = 0; k < L.dictionary.size(); ++k) {
        const TraceMonomial& mono = L.dictionary.entries[std::size_t(k)];
        double mix = mixture_value(TracePoly<Rational>::from_monomial(mono, 1));
        rep.max_moment_residual =
            std::max(rep.max_moment_residual, std::abs(mix - L.values[std::size_t(k)]));
    }

    RuleSet rules = compile_rules(spec);
    for (std::size_t j = 0; j < tuples.size(); ++j) {
        for (int var = 1; var <= spec.n; ++var) {
            RuleKind kind = rules.rule_for(var);
            if (kind == RuleKind::none) continue;
            const Eigen::MatrixXd& X = m.components[j].matrices[std::size_t(var - 1)];
            Eigen::MatrixXd R = X * X;
            if (kind == RuleKind::projection)
                R -= X;
            else
                R -= Eigen::MatrixXd::Identity(X.rows(), X.cols());
            rep.max_tag_residual = std::max(rep.max_tag_residual, R.cwiseAbs().maxCoeff());
        }
        for (const Constraint* c : inequality_constraints(spec)) {
            Eigen::MatrixXd E = eigen_from_dense(evaluate<double>(c->poly, tuples[j]));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (E + E.transpose()));
            rep.constraint_floor = std::min(rep.constraint_floor, es.eigenvalues().minCoeff());
        }
        for (const Constraint* c : residual_equalities(spec)) {
            Eigen::MatrixXd E = eigen_from_dense(evaluate<double>(c->poly, tuples[j]));
            rep.max_equality_residual = std::max(rep.max_equality_residual, E.cwiseAbs().maxCoeff());
        }
    }

    rep.objective_mixture = mixture_value(spec.objective);
    rep.objective_functional = L.value(spec.objective);
    return rep;
}

std::string minimizer_json(const Minimizer& m, int indent) {
    nlohmann::json j;
    j["rank"] = m.rank;
    j["flat"] = m.flat;
    j["flatness"] = {{"rank_low", m.flatness.rank_low},
                     {"rank_full", m.flatness.rank_full},
                     {"sigma_max", m.flatness.sigma_max},
                     {"threshold", m.flatness.threshold}};
    if (!m.warning.empty()) j["warning"] = m.warning;
    nlohmann::json comps = nlohmann::json::array();
    for (const MinimizerComponent& c : m.components) {
        nlohmann::json jc;
        jc["weight"] = c.weight;
        jc["dimension"] = c.matrices.empty() ? 0 : int(c.matrices.front().rows());
        nlohmann::json mats = nlohmann::json::array();
        for (const auto& X : c.matrices) {
            nlohmann::json rows = nlohmann::json::array();
            for (int i = 0; i < int(X.rows()); ++i) {
                nlohmann::json row = nlohmann::json::array();
                for (int k = 0; k < int(X.cols()); ++k) row.push_back(X(i, k));
                rows.push_back(std::move(row));
            }
            mats.push_back(std::move(rows));
        }
        jc["matrices"] = std::move(mats);
        comps.push_back(std::move(jc));
    }
    j["components"] = std::move(comps);
    return j.dump(indent);
}

} // namespace traceopt
