// traceopt: command-line front end for trace-polynomial optimization.
//
// Subcommands:
//   solve    run the moment relaxation hierarchy and report bounds
//   extract  solve, then extract a finite-dimensional minimizer (flat case)
//   certify  solve, then emit/verify a weighted-sum-of-squares certificate
//   export   write the assembled conic problem in SDPA sparse format
//
// Exit codes: 0 success/optimal, 2 infeasible or unbounded, 3 numerical
// failure (including non-flat extraction), 4 input error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "traceopt/certificate.hpp"
#include "traceopt/conic.hpp"
#include "traceopt/errors.hpp"
#include "traceopt/external.hpp"
#include "traceopt/gns.hpp"
#include "traceopt/hankel.hpp"
#include "traceopt/parser.hpp"
#include "traceopt/problem.hpp"
#include "traceopt/relaxation.hpp"
#include "traceopt/sdpa_io.hpp"

namespace {

using namespace traceopt;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInput = 4;

struct CommonOpts {
    std::string example;
    std::string problem_path;
    int d = 0;     // 0: use the file's order, else the minimal admissible order
    int d_max = 0; // 0: same as d
    std::string mode;                 // "", "per-k", "single"
    std::string localizers = "auto";  // auto|pure|trace
    std::string solver = "bundled";   // bundled | external:<id>
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;
    std::size_t basis_cap = kDefaultBasisCap;
    bool no_bounds = false;
    bool force = false;
    bool verbose = false;
    bool parallel = false;
    std::string out;
};

void add_input_opts(CLI::App* cmd, CommonOpts& o) {
    auto* ex = cmd->add_option("--example", o.example,
                               "Built-in problem id (toy, bell-quadratic, bell-covariance, bell-bilocal)");
    auto* pf = cmd->add_option("--problem", o.problem_path, "Problem description file");
    ex->excludes(pf);
    cmd->add_option("--d", o.d, "Relaxation order (default: file's order, else the minimal order)");
    cmd->add_option("--mode", o.mode, "Norm-bound localizer mode")
        ->check(CLI::IsMember({"per-k", "single"}));
    cmd->add_option("--localizers", o.localizers,
                    "Constraint localizer indexing: pure monomials or trace words")
        ->check(CLI::IsMember({"auto", "pure", "trace"}));
    cmd->add_option("--basis-cap", o.basis_cap, "Abort if a basis enumeration exceeds this size");
    cmd->add_flag("--no-bounds", o.no_bounds, "Drop the norm-bound localizers");
    cmd->add_flag("--force", o.force, "Run very large built-in problems anyway");
    cmd->add_option("--out", o.out, "Write the machine-readable result to this file");
}

void add_solver_opts(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--solver", o.solver, "bundled, or external:<id> (external:cvxopt)");
    cmd->add_option("--tol-gap", o.tol_gap, "Relative duality-gap tolerance");
    cmd->add_option("--tol-feas", o.tol_feas, "Feasibility tolerance");
    cmd->add_flag("--verbose", o.verbose, "Print solver iterations");
}

struct LoadedProblem {
    ProblemSpec spec;
    int file_order = 0;
    bool has_mode = false;
    BoundednessMode file_mode = BoundednessMode::per_k;
};

LoadedProblem load_problem(const CommonOpts& o) {
    LoadedProblem lp;
    if (!o.example.empty()) {
        lp.spec = builtin_problem(o.example);
        if (o.example == "bell-bilocal" && !o.force)
            throw InputError(
                "bell-bilocal needs a degree-8 relaxation whose moment matrix has tens of "
                "thousands of rows; rerun with --force (and expect hours / tens of GB), or "
                "export the conic problem for a large-scale solver");
        return lp;
    }
    if (o.problem_path.empty())
        throw InputError("no input: pass --example <id> or --problem <file>");
    std::ifstream in(o.problem_path);
    if (!in) throw InputError("cannot open problem file '" + o.problem_path + "'");
    ProblemFile pf = parse_problem_file(in);
    lp.spec = pf.spec;
    lp.file_order = pf.order;
    lp.has_mode = pf.has_boundedness_mode;
    lp.file_mode = pf.boundedness;
    return lp;
}

RelaxationOptions relaxation_options(const CommonOpts& o, const LoadedProblem& lp) {
    RelaxationOptions opt;
    if (!o.mode.empty())
        opt.boundedness = (o.mode == "single") ? BoundednessMode::single : BoundednessMode::per_k;
    else if (lp.has_mode)
        opt.boundedness = lp.file_mode;
    opt.include_boundedness = !o.no_bounds;
    opt.basis_cap = o.basis_cap;
    return opt;
}

bool constraints_all_pure(const ProblemSpec& spec) {
    for (const Constraint* c : inequality_constraints(spec))
        if (!c->poly.is_pure()) return false;
    for (const Constraint* c : residual_equalities(spec))
        if (!c->poly.is_pure()) return false;
    return true;
}

AssembledRelaxation build_relaxation(const ProblemSpec& spec, int d, const CommonOpts& o,
                                     const RelaxationOptions& opt) {
    bool pure = o.localizers == "pure" || (o.localizers == "auto" && constraints_all_pure(spec));
    return pure ? build_pure_relaxation(spec, d, opt) : build_general_relaxation(spec, d, opt);
}

SolveResult run_solver(const ConicProblem& p, const CommonOpts& o) {
    SolverSettings st;
    st.tol_gap = o.tol_gap;
    st.tol_feas = o.tol_feas;
    st.verbose = o.verbose;
    if (o.solver == "bundled") return solve(p, st);
    if (o.solver.rfind("external:", 0) == 0) return solve_external(p, o.solver.substr(9), st);
    throw InputError("unknown solver '" + o.solver + "' (use bundled or external:<id>)");
}

int status_exit(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return kExitOk;
        case SolveStatus::infeasible_certificate:
        case SolveStatus::unbounded_certificate: return kExitInfeasible;
        default: return kExitNumerical;
    }
}

int pick_order(const CommonOpts& o, const LoadedProblem& lp, int floor_order = 0) {
    int d = o.d > 0 ? o.d : (lp.file_order > 0 ? lp.file_order : minimal_order(lp.spec));
    return std::max(d, std::max(floor_order, minimal_order(lp.spec)));
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

void write_out(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open output file '" + path + "'");
    f << text;
    if (!f) throw InputError("failed writing output file '" + path + "'");
}

json block_summary(const AssembledRelaxation& relax) {
    json blocks = json::array();
    for (std::size_t b = 0; b < relax.conic.blocks.size(); ++b)
        blocks.push_back({{"name", relax.conic.blocks[b].name},
                          {"size", relax.conic.blocks[b].size}});
    return blocks;
}

json solve_record(const AssembledRelaxation& relax, const SolveResult& res, double seconds) {
    json rec;
    rec["order"] = relax.d;
    rec["status"] = to_string(res.status);
    rec["bound"] = relax.reported_value(res.dual_obj);
    rec["internal_primal"] = res.primal_obj;
    rec["internal_dual"] = res.dual_obj;
    rec["gap"] = res.res_gap;
    rec["residual_primal"] = res.res_primal;
    rec["residual_dual"] = res.res_dual;
    rec["iterations"] = res.iterations;
    rec["dictionary_classes"] = relax.dictionary.size();
    rec["blocks"] = block_summary(relax);
    rec["equalities"] = relax.conic.equalities.size();
    rec["seconds"] = seconds;
    return rec;
}

void print_structure(const AssembledRelaxation& relax) {
    const Block& moment = relax.conic.blocks.front();
    std::cout << "order " << relax.d << ": moment block " << moment.size << "x" << moment.size
              << ", dictionary " << relax.dictionary.size() << " classes, blocks "
              << relax.conic.blocks.size() << ", equalities " << relax.conic.equalities.size();
    if (moment.size <= 500) {
        HankelStructure hs = hankel_classes(enumerate_basis(relax.spec.n, relax.d, relax.rules,
                                                            /*pure_only=*/false,
                                                            relax.options.basis_cap));
        std::cout << ", relations " << hs.relation_count();
    }
    std::cout << "\n";
}

void print_result(const AssembledRelaxation& relax, const SolveResult& res, double seconds) {
    std::cout << "order " << relax.d << ": status " << to_string(res.status) << ", bound "
              << fmt(relax.reported_value(res.dual_obj)) << ", gap " << fmt(res.res_gap)
              << ", iterations " << res.iterations << ", time " << fmt(seconds) << "s\n";
    if (!res.message.empty() && res.status != SolveStatus::optimal)
        std::cout << "  solver message: " << res.message << "\n";
}

struct TimedSolve {
    AssembledRelaxation relax;
    SolveResult result;
    double seconds = 0.0;
};

TimedSolve solve_order(const ProblemSpec& spec, int d, const CommonOpts& o,
                       const RelaxationOptions& opt) {
    TimedSolve ts{build_relaxation(spec, d, o, opt), {}, 0.0};
    auto t0 = std::chrono::steady_clock::now();
    ts.result = run_solver(ts.relax.conic, o);
    ts.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return ts;
}

void report_order(const TimedSolve& ts) {
    print_structure(ts.relax);
    print_result(ts.relax, ts.result, ts.seconds);
}

json problem_header(const ProblemSpec& spec, const CommonOpts& o) {
    return json{{"problem", spec.name},
                {"variables", spec.n},
                {"sense", spec.sense == Sense::maximize ? "maximize" : "minimize"},
                {"norm_bound", to_double(spec.N)},
                {"solver", o.solver}};
}

// ---------------------------------------------------------------------------

int cmd_solve(const CommonOpts& o) {
    LoadedProblem lp = load_problem(o);
    RelaxationOptions opt = relaxation_options(o, lp);
    const int d0 = pick_order(o, lp);
    const int d1 = std::max(d0, o.d_max);

    std::cout << "problem " << lp.spec.name << ": " << lp.spec.n << " variables, "
              << (lp.spec.sense == Sense::maximize ? "maximize" : "minimize")
              << ", norm bound " << lp.spec.N.get_str() << "\n";

    json out = problem_header(lp.spec, o);
    out["orders"] = json::array();

    // With --parallel the orders of a sweep run concurrently; results are
    // consumed in ascending order, so the printed report is byte-identical
    // to a sequential run. Verbose iteration logs would interleave across
    // threads, so --verbose keeps the sweep sequential.
    const bool concurrent = o.parallel && !o.verbose && d1 > d0;
    std::vector<std::future<TimedSolve>> pending;
    if (concurrent)
        for (int d = d0; d <= d1; ++d)
            pending.push_back(std::async(std::launch::async,
                                         [&, d] { return solve_order(lp.spec, d, o, opt); }));

    int exit_code = kExitNumerical;
    for (int d = d0; d <= d1; ++d) {
        TimedSolve ts =
            concurrent ? pending[std::size_t(d - d0)].get() : solve_order(lp.spec, d, o, opt);
        report_order(ts);
        out["orders"].push_back(solve_record(ts.relax, ts.result, ts.seconds));
        exit_code = status_exit(ts.result.status);
        if (ts.result.ok()) out["bound"] = ts.relax.reported_value(ts.result.dual_obj);
        if (exit_code == kExitInfeasible) break; // higher orders stay infeasible
    }
    if (!o.out.empty()) write_out(o.out, out.dump(2) + "\n");
    return exit_code;
}

int cmd_extract(const CommonOpts& o, int delta, double rank_tol, double report_tol) {
    LoadedProblem lp = load_problem(o);
    RelaxationOptions opt = relaxation_options(o, lp);
    const int d = pick_order(o, lp, minimal_order(lp.spec) + delta);
    if (d - delta < 1) throw InputError("extraction needs order > delta");

    TimedSolve ts = solve_order(lp.spec, d, o, opt);
    if (!ts.result.ok()) return status_exit(ts.result.status);

    MomentFunctional L = functional_from_solution(ts.relax, ts.result);
    GnsSettings gs;
    gs.rank_tol = rank_tol;
    Minimizer m = pure_trace_gns(L, d - delta, delta, gs);

    std::cout << "flatness: rank(M_" << (d - delta) << ") = " << m.flatness.rank_low
              << ", rank(M_" << d << ") = " << m.flatness.rank_full << " -> "
              << (m.flat ? "flat" : "NOT flat") << "\n";
    if (!m.warning.empty()) std::cout << "warning: " << m.warning << "\n";
    std::cout << "extracted " << m.components.size() << " component(s), GNS dimension " << m.rank
              << "\n";
    for (std::size_t c = 0; c < m.components.size(); ++c) {
        long dim = m.components[c].matrices.empty() ? 0 : long(m.components[c].matrices[0].rows());
        std::cout << "  component " << c << ": dimension " << dim << ", weight "
                  << fmt(m.components[c].weight) << "\n";
    }

    MinimizerReport rep = validate_minimizer(m, lp.spec, L);
    std::cout << "validation: weights sum " << fmt(rep.sum_weights) << ", moment residual "
              << fmt(rep.max_moment_residual) << ", constraint floor " << fmt(rep.constraint_floor)
              << ", tag residual " << fmt(rep.max_tag_residual) << ", objective (mixture) "
              << fmt(lp.spec.sense == Sense::maximize ? -rep.objective_mixture
                                                      : rep.objective_mixture)
              << "\n";

    if (!o.out.empty()) {
        json doc = problem_header(lp.spec, o);
        doc["order"] = d;
        doc["delta"] = delta;
        doc["bound"] = ts.relax.reported_value(ts.result.dual_obj);
        doc["minimizer"] = json::parse(minimizer_json(m));
        doc["validation"] = {{"sum_weights", rep.sum_weights},
                             {"max_moment_residual", rep.max_moment_residual},
                             {"constraint_floor", rep.constraint_floor},
                             {"max_equality_residual", rep.max_equality_residual},
                             {"max_tag_residual", rep.max_tag_residual},
                             {"objective_mixture", rep.objective_mixture},
                             {"objective_functional", rep.objective_functional}};
        write_out(o.out, doc.dump(2) + "\n");
    }
    if (!m.flat) {
        std::cout << "extraction completed on a non-flat solution; treat the minimizer as "
                     "heuristic\n";
        return kExitNumerical;
    }
    if (!rep.ok(report_tol)) {
        std::cout << "minimizer failed validation at tolerance " << fmt(report_tol) << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_certify(const CommonOpts& o, bool exact, unsigned long denom_bound, double res_tol,
                const std::string& verify_only) {
    if (!verify_only.empty()) {
        std::ifstream in(verify_only);
        if (!in) throw InputError("cannot open certificate file '" + verify_only + "'");
        Certificate<Rational> cert = read_certificate(in);
        Rational residual = verify_certificate(cert);
        double rd = to_double(residual);
        std::cout << "certificate: " << cert.terms.size() << " terms, order " << cert.d
                  << ", bound " << fmt(to_double(cert.reported_bound())) << "\n";
        std::cout << "verification residual (exact arithmetic): " << fmt(rd) << "\n";
        bool pass = rd <= res_tol;
        std::cout << (pass ? "PASS" : "FAIL") << " at tolerance " << fmt(res_tol) << "\n";
        return pass ? kExitOk : kExitNumerical;
    }

    LoadedProblem lp = load_problem(o);
    RelaxationOptions opt = relaxation_options(o, lp);
    const int d = pick_order(o, lp);
    TimedSolve ts = solve_order(lp.spec, d, o, opt);
    if (!ts.result.ok()) return status_exit(ts.result.status);

    CertificateSettings cs;
    cs.denom_bound = denom_bound;
    Certificate<double> fc = extract_certificate(ts.relax, ts.result, cs);
    double res_f = verify_certificate(fc);
    std::cout << "float certificate: " << fc.terms.size() << " terms, bound "
              << fmt(fc.reported_bound()) << ", residual " << fmt(res_f) << "\n";

    double governing = res_f;
    if (exact) {
        Certificate<Rational> xc = rationalize_certificate(ts.relax, ts.result, cs);
        Rational res_x = verify_certificate(xc);
        governing = to_double(res_x);
        std::cout << "exact certificate: " << xc.terms.size() << " terms, bound "
                  << fmt(to_double(xc.reported_bound())) << ", residual " << fmt(governing)
                  << "\n";
        if (!o.out.empty()) {
            std::ostringstream ss;
            write_certificate(ss, xc);
            write_out(o.out, ss.str());
            std::cout << "wrote " << o.out << "\n";
        }
    } else if (!o.out.empty()) {
        std::ostringstream ss;
        write_certificate(ss, fc);
        write_out(o.out, ss.str());
        std::cout << "wrote " << o.out << "\n";
    }
    bool pass = governing <= res_tol;
    std::cout << (pass ? "PASS" : "FAIL") << " at tolerance " << fmt(res_tol) << "\n";
    return pass ? kExitOk : kExitNumerical;
}

int cmd_export(const CommonOpts& o) {
    LoadedProblem lp = load_problem(o);
    RelaxationOptions opt = relaxation_options(o, lp);
    const int d = pick_order(o, lp);
    AssembledRelaxation relax = build_relaxation(lp.spec, d, o, opt);
    print_structure(relax);
    std::string text = export_sdpa(relax.conic);
    if (o.out.empty())
        std::cout << text;
    else {
        write_out(o.out, text);
        std::cout << "wrote " << o.out << " (" << text.size() << " bytes)\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"trace-polynomial optimization over norm-bounded tuples: converging "
                 "semidefinite bounds, finite-dimensional minimizers, positivity certificates"};
    app.require_subcommand(1);

    CommonOpts so, eo, co, xo;
    int delta = 1;
    double rank_tol = 1e-6, report_tol = 1e-4, res_tol = 1e-6;
    bool exact = false;
    unsigned long denom_bound = 1000000;
    std::string verify_only;

    auto* solve_cmd = app.add_subcommand("solve", "Run the relaxation hierarchy");
    add_input_opts(solve_cmd, so);
    add_solver_opts(solve_cmd, so);
    solve_cmd->add_option("--d-max", so.d_max, "Solve every order from --d up to this");
    solve_cmd->add_flag("--parallel", so.parallel,
                        "Solve the orders of a --d-max sweep concurrently");

    auto* extract_cmd =
        app.add_subcommand("extract", "Solve and extract a finite-dimensional minimizer");
    add_input_opts(extract_cmd, eo);
    add_solver_opts(extract_cmd, eo);
    extract_cmd->add_option("--delta", delta, "Flatness margin (orders between the two ranks)")
        ->check(CLI::PositiveNumber);
    extract_cmd->add_option("--rank-tol", rank_tol, "Relative singular-value cutoff for ranks");
    extract_cmd->add_option("--report-tol", report_tol, "Validation tolerance for the minimizer");

    auto* certify_cmd =
        app.add_subcommand("certify", "Solve and emit a weighted-sum-of-squares certificate");
    add_input_opts(certify_cmd, co);
    add_solver_opts(certify_cmd, co);
    certify_cmd->add_flag("--exact", exact, "Round the certificate to exact rationals");
    certify_cmd->add_option("--denom-bound", denom_bound, "Denominator cap for --exact");
    certify_cmd->add_option("--res-tol", res_tol, "Largest acceptable verification residual");
    certify_cmd->add_option("--verify-only", verify_only,
                            "Skip solving; verify this certificate file in exact arithmetic");

    auto* export_cmd = app.add_subcommand("export", "Write the conic problem in SDPA format");
    add_input_opts(export_cmd, xo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(so);
        if (extract_cmd->parsed()) return cmd_extract(eo, delta, rank_tol, report_tol);
        if (certify_cmd->parsed()) return cmd_certify(co, exact, denom_bound, res_tol, verify_only);
        if (export_cmd->parsed()) return cmd_export(xo);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitInput;
    } catch (const BasisOverflowError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInput;
}
