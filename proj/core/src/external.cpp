#include "traceopt/external.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "traceopt/errors.hpp"
#include "traceopt/sdpa_io.hpp"

namespace traceopt {

namespace fs = std::filesystem;

SolveStatus map_external_status(const std::string& status) {
    if (status == "optimal") return SolveStatus::optimal;
    if (status == "primal infeasible") return SolveStatus::infeasible_certificate;
    if (status == "dual infeasible") return SolveStatus::unbounded_certificate;
    if (status == "unknown") return SolveStatus::max_iter;
    return SolveStatus::numerical_failure;
}

namespace {

fs::path executable_dir() {
    std::error_code ec;
    fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    if (ec) return {};
    return exe.parent_path();
}

std::string run_and_capture(const std::string& cmd, int& exit_code) {
    std::string output;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw ConfigError("failed to launch external solver process");
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), got);
    exit_code = ::pclose(pipe);
    return output;
}

} // namespace

std::string find_cvxopt_bridge() {
    if (const char* env = std::getenv("TRACEOPT_CVXOPT_BRIDGE")) {
        if (fs::exists(env)) return env;
        return {};
    }
    const std::string name = "cvxopt_bridge.py";
    fs::path exe_dir = executable_dir();
    std::vector<fs::path> candidates;
    if (!exe_dir.empty()) {
        candidates.push_back(exe_dir / name);
        candidates.push_back(exe_dir / ".." / "share" / "traceopt" / name);
    }
    candidates.push_back(fs::path("tools") / name);
    for (const fs::path& c : candidates) {
        std::error_code ec;
        if (fs::exists(c, ec)) return c.string();
    }
    return {};
}

SolveResult solve_external(const ConicProblem& p, const std::string& solver_id,
                           const SolverSettings& settings) {
    p.validate();
    if (solver_id != "cvxopt")
        throw ConfigError("unknown external solver id '" + solver_id + "' (supported: cvxopt)");
    std::string bridge = find_cvxopt_bridge();
    if (bridge.empty())
        throw ConfigError("cvxopt bridge script not found; set TRACEOPT_CVXOPT_BRIDGE or install "
                          "cvxopt_bridge.py next to the executable");

    fs::path dir = fs::temp_directory_path() / ("traceopt-ext-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    fs::path problem_file = dir / "problem.dat-s";
    fs::path answer_file = dir / "answer.json";
    {
        std::ofstream out(problem_file);
        export_sdpa(p, out);
    }

    std::ostringstream cmd;
    cmd << "python3 " << bridge << " " << problem_file << " " << answer_file
        << " --tol " << settings.tol_gap << " --max-iter " << settings.max_iter << " 2>&1";
    int code = 0;
    std::string log = run_and_capture(cmd.str(), code);

    std::ifstream in(answer_file);
    if (!in)
        throw ConfigError("external solver produced no answer file; output was:\n" + log);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("external solver answer is not valid JSON: ") + e.what());
    }
    std::error_code ec;
    fs::remove_all(dir, ec);

    SolveResult res;
    res.status = map_external_status(j.value("status", "error"));
    res.message = "external cvxopt: " + j.value("status", "error");
    res.primal_obj = j.value("primal_objective", 0.0);
    res.dual_obj = j.value("dual_objective", 0.0);
    res.iterations = j.value("iterations", 0);
    if (j.contains("y"))
        res.y = j["y"].get<std::vector<double>>();
    if (j.contains("Z")) {
        for (std::size_t b = 0; b < j["Z"].size(); ++b) {
            const auto& rows = j["Z"][b];
            int k = int(rows.size());
            Eigen::MatrixXd Zb(k, k);
            for (int r = 0; r < k; ++r)
                for (int c2 = 0; c2 < k; ++c2) Zb(r, c2) = rows[std::size_t(r)][std::size_t(c2)].get<double>();
            res.Z.push_back(0.5 * (Zb + Zb.transpose()));
        }
    }
    if (j.contains("eq_duals"))
        res.eq_duals = j["eq_duals"].get<std::vector<double>>();
    if (!res.y.empty() && res.status == SolveStatus::optimal) {
        // Recompute slack blocks so downstream consumers see the same schema
        // as the bundled solver.
        for (const Block& blk : p.blocks) {
            Eigen::MatrixXd Sb = Eigen::MatrixXd::Zero(blk.size, blk.size);
            for (const BlockEntry& e : blk.entries) {
                double v = (e.var < 0) ? e.coeff : e.coeff * res.y[std::size_t(e.var)];
                Sb(e.row, e.col) += v;
                if (e.row != e.col) Sb(e.col, e.row) += v;
            }
            res.S.push_back(Sb);
        }
        res.res_gap = std::abs(res.primal_obj - res.dual_obj);
    }
    return res;
}

} // namespace traceopt
