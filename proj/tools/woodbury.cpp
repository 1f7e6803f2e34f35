// Command-line front end: load matrices from files, check the update
// hypotheses, compute pseudoinverses of a - x y* with optional verification
// against the SVD route, and generate fixture triples.
//
// Exit codes: 0 success, 1 hypothesis/precondition failure, 2 input error,
// 3 numerical failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "woodbury/woodbury.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_hypothesis = 1;
constexpr int exit_input = 2;
constexpr int exit_numeric = 3;

using Mat = woodbury::Matrix<double>;
using Named = woodbury::NamedMatrix<double>;
using Tol = woodbury::TolerancePolicy<double>;
using woodbury::json;

struct TolFlags {
    std::optional<double> rank_rtol;
    std::optional<double> eq_rtol;
    std::optional<double> cond_max;

    Tol resolve() const {
        Tol tol;
        if (rank_rtol) tol.rank_rtol = *rank_rtol;
        if (eq_rtol) tol.eq_rtol = *eq_rtol;
        if (cond_max) tol.cond_max = *cond_max;
        try {
            tol.validate();
        } catch (const woodbury::precondition_error& e) {
            throw woodbury::io_error(std::string("invalid tolerance flags: ") + e.what());
        }
        return tol;
    }
};

void add_tol_flags(CLI::App* cmd, TolFlags& flags) {
    cmd->add_option("--rank-rtol", flags.rank_rtol,
                    "Relative singular-value cutoff (default max(rows,cols)*eps)");
    cmd->add_option("--eq-rtol", flags.eq_rtol,
                    "Relative threshold for equality and hypothesis residuals (default 1e-10)");
    cmd->add_option("--cond-max", flags.cond_max,
                    "Condition-number ceiling for invertibility (default 1e12)");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json inputs_digest(const Named& a, const Named& x, const Named& y) {
    return json::array({woodbury::input_digest(a), woodbury::input_digest(x),
                        woodbury::input_digest(y)});
}

int run_pinv(const std::string& path, const TolFlags& flags) {
    const Tol tol = flags.resolve();
    const Named in = woodbury::load_matrix(path);
    const Mat b = woodbury::pinv(in.matrix, tol);
    std::cout << woodbury::matrix_to_json(b, in.name.empty() ? "pinv" : in.name + "_pinv").dump(2)
              << '\n';
    return exit_ok;
}

int run_check(const std::string& pa, const std::string& px, const std::string& py,
              const TolFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tol tol = flags.resolve();
    const Named a = woodbury::load_matrix(pa);
    const Named x = woodbury::load_matrix(px);
    const Named y = woodbury::load_matrix(py);

    const auto rep = woodbury::check_conditions(a.matrix, x.matrix, y.matrix, tol);
    const auto [cols_ok, rows_ok] =
        woodbury::check_rank_conditions(a.matrix, x.matrix, y.matrix, tol);

    json out;
    out["inputs"] = inputs_digest(a, x, y);
    out["conditions"] = woodbury::condition_report_to_json(rep);
    out["rank_checks"] = {{"columns_consistent", cols_ok}, {"rows_consistent", rows_ok}};
    out["wall_time_seconds"] = seconds_since(t0);
    std::cout << out.dump(2) << '\n';

    const bool usable =
        rep.range_x_ok && rep.range_y_ok && (rep.inner_regular || rep.smw_core_invertible);
    return usable ? exit_ok : exit_hypothesis;
}

int run_update(const std::string& pa, const std::string& px, const std::string& py,
               const TolFlags& flags, bool verify, const std::string& force) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tol tol = flags.resolve();
    const Named a = woodbury::load_matrix(pa);
    const Named x = woodbury::load_matrix(px);
    const Named y = woodbury::load_matrix(py);

    woodbury::UpdateResult<double> res;
    if (force.empty()) {
        res = woodbury::update(a.matrix, x.matrix, y.matrix, tol, verify);
    } else {
        woodbury::Formula f = woodbury::Formula::oracle_fallback;
        if (force == "smw") f = woodbury::Formula::smw;
        else if (force == "special") f = woodbury::Formula::special;
        else if (force == "general") f = woodbury::Formula::general;
        res = woodbury::update_with_formula(a.matrix, x.matrix, y.matrix, f, tol, verify);
    }

    json out;
    out["inputs"] = inputs_digest(a, x, y);
    out["conditions"] = woodbury::condition_report_to_json(res.report);
    out["formula_used"] = woodbury::formula_name(res.formula_used);
    out["escalated"] = res.escalated;
    if (!res.note.empty()) out["note"] = res.note;
    out["pseudoinverse"] = woodbury::matrix_to_json(res.pseudoinverse, "pseudoinverse");
    out["penrose_residuals"] = woodbury::penrose_to_json(res.penrose);
    if (res.oracle_deviation)
        out["oracle_deviation"] = woodbury::format_real(*res.oracle_deviation);
    if (verify) {
        json inter;
        inter["a_pinv"] = woodbury::matrix_to_json(res.a_pinv, "a_pinv");
        inter["xy_star"] = woodbury::matrix_to_json(res.xy_star, "xy_star");
        if (res.left_factor_pinv)
            inter["left_factor_pinv"] =
                woodbury::matrix_to_json(*res.left_factor_pinv, "left_factor_pinv");
        if (res.right_factor_pinv)
            inter["right_factor_pinv"] =
                woodbury::matrix_to_json(*res.right_factor_pinv, "right_factor_pinv");
        out["intermediates"] = inter;
    }
    out["wall_time_seconds"] = seconds_since(t0);
    std::cout << out.dump(2) << '\n';
    return exit_ok;
}

int run_generate(const std::string& kind_str, std::size_t m, std::size_t n, std::size_t r,
                 std::uint64_t seed, const std::string& out_dir) {
    const auto kind = woodbury::parse_instance_kind(kind_str);
    if (!kind) throw woodbury::io_error("unknown instance kind: " + kind_str);
    const auto inst = woodbury::generate_instance<double>(*kind, m, n, r, seed);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw woodbury::io_error("cannot create output directory: " + out_dir);

    const std::filesystem::path dir(out_dir);
    woodbury::save_matrix(dir / "a.json", inst.a, "a");
    woodbury::save_matrix(dir / "x.json", inst.x, "x");
    woodbury::save_matrix(dir / "y.json", inst.y, "y");

    json out;
    out["kind"] = woodbury::instance_kind_name(*kind);
    out["seed"] = seed;
    out["files"] = json::array(
        {(dir / "a.json").string(), (dir / "x.json").string(), (dir / "y.json").string()});
    std::cout << out.dump(2) << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudoinverse updates for low-rank-perturbed matrices"};
    app.require_subcommand(1);

    TolFlags flags;

    auto* cmd_pinv = app.add_subcommand("pinv", "Moore-Penrose pseudoinverse of a matrix file");
    std::string pinv_path;
    cmd_pinv->add_option("matrix", pinv_path, "matrix file (.json or .csv)")->required();
    add_tol_flags(cmd_pinv, flags);

    auto* cmd_check = app.add_subcommand("check", "Check the update hypotheses for (a, x, y)");
    std::string ca, cx, cy;
    cmd_check->add_option("a", ca, "square matrix file")->required();
    cmd_check->add_option("x", cx, "left factor file")->required();
    cmd_check->add_option("y", cy, "right factor file")->required();
    add_tol_flags(cmd_check, flags);

    auto* cmd_update = app.add_subcommand("update", "Compute (a - x y*)+ by the best formula");
    std::string ua, ux, uy, force;
    bool verify = false;
    cmd_update->add_option("a", ua, "square matrix file")->required();
    cmd_update->add_option("x", ux, "left factor file")->required();
    cmd_update->add_option("y", uy, "right factor file")->required();
    cmd_update->add_flag("--verify", verify,
                         "also compare against the SVD pseudoinverse and report intermediates");
    cmd_update->add_option("--force-formula", force, "bypass dispatch: smw, special or general")
        ->check(CLI::IsMember({"smw", "special", "general"}));
    add_tol_flags(cmd_update, flags);

    auto* cmd_gen = app.add_subcommand("generate", "Write a fixture triple a.json, x.json, y.json");
    std::string kind, out_dir = ".";
    std::size_t gm = 0, gn = 0, gr = 0;
    std::uint64_t seed = 0;
    cmd_gen->add_option("kind", kind,
                        "smw_regular | inner_regular | special_pair | range_violating | "
                        "inner_violating")
        ->required();
    cmd_gen->add_option("m", gm, "dimension of a (m x m)")->required();
    cmd_gen->add_option("n", gn, "columns of x and y")->required();
    cmd_gen->add_option("r", gr, "rank of a")->required();
    cmd_gen->add_option("seed", seed, "generator seed")->required();
    cmd_gen->add_option("out_dir", out_dir, "output directory (default .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return exit_input;
    }

    try {
        if (cmd_pinv->parsed()) return run_pinv(pinv_path, flags);
        if (cmd_check->parsed()) return run_check(ca, cx, cy, flags);
        if (cmd_update->parsed()) return run_update(ua, ux, uy, flags, verify, force);
        if (cmd_gen->parsed()) return run_generate(kind, gm, gn, gr, seed, out_dir);
    } catch (const woodbury::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const woodbury::dimension_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const woodbury::precondition_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_hypothesis;
    } catch (const woodbury::numerical_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numeric;
    }
    return exit_input;
}
