#pragma once

// Batch front-end behind the nlhj executable: runs one configured experiment,
// writes its CSVs atomically and maps outcomes to exit codes.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nlhj/acceptance.hpp"
#include "nlhj/config.hpp"
#include "nlhj/ergodic.hpp"
#include "nlhj/errors.hpp"
#include "nlhj/evolution.hpp"
#include "nlhj/io.hpp"
#include "nlhj/model.hpp"
#include "nlhj/verify.hpp"

namespace nlhj {

enum ExitCode : int { exit_pass = 0, exit_violation = 1, exit_config = 2, exit_solver = 3 };

namespace runner_detail {

struct Console {
    std::ostream& os;
    bool quiet;
    void verdict(bool passed, const std::string& what) const {
        if (!quiet) os << (passed ? "PASS " : "FAIL ") << what << '\n';
    }
    void info(const std::string& what) const {
        if (!quiet) os << what << '\n';
    }
};

inline StationaryOptions stationary_options(const Numerics& n) {
    StationaryOptions so;
    so.tol = n.tol;
    so.max_steps = n.max_steps;
    return so;
}

inline int run_check(const ExperimentConfig& cfg, const std::filesystem::path& out, const Console& con) {
    const Numerics& n = cfg.numerics;
    std::ostringstream csv;
    csv << "check,seed,passed,worst_slack,witness\n";
    bool all = true;
    auto row = [&](const CheckReport& rep, std::uint64_t seed) {
        all = all && rep.passed;
        csv << rep.name << ',' << seed << ',' << (rep.passed ? "pass" : "fail") << ',' << format_real(rep.worst_slack)
            << ',' << detail::csv_field(rep.witness) << '\n';
        con.verdict(rep.passed, rep.name + " seed " + std::to_string(seed) + " worst slack " +
                                    format_real(rep.worst_slack) + (rep.passed ? "" : " at " + rep.witness));
    };
    for (std::uint64_t s : n.seeds) {
        row(check_diffusion(cfg.spec, n.checker_samples, s), s);
        row(check_H1(cfg.spec, n.checker_samples, s, n.p_max), s);
        row(check_H2prime(cfg.spec, n.checker_samples, s, n.p_max), s);
        row(combined(check_levy(cfg.spec, n.quad_resolution, 64, s)), s);
    }
    write_file_atomic(out / "checks.csv", csv.str());
    return all ? exit_pass : exit_violation;
}

inline int run_evolve(const ExperimentConfig& cfg, const std::filesystem::path& out, const Console& con) {
    const TorusGrid g(cfg.spec.dim, cfg.numerics.N);
    Discretization disc(cfg.spec, g, cfg.numerics.scheme);
    EvolutionOptions eo;
    eo.T_final = cfg.numerics.T_final;
    eo.sample_every = cfg.output.sample_every;
    eo.window = cfg.numerics.window;
    auto [u, trace] = evolve(disc, cfg.initial.sample(g), eo);
    write_csv_atomic(out / "trace.csv", [&](std::ostream& os) { trace.write_csv(os); });
    write_csv_atomic(out / "final.csv", [&](std::ostream& os) { write_csv(os, u); });
    std::string slope = "n/a (fewer than 2W samples)";
    if (trace.records.size() >= 2 * trace.window) slope = format_real(estimate_slope(trace).slope);
    con.info("evolve: " + std::string(to_string(trace.status)) + " at t = " + format_real(trace.records.back().t) +
             " after " + std::to_string(trace.steps) + " steps, slope " + slope + ", osc " +
             format_real(trace.records.back().osc));
    return exit_pass;
}

inline int run_stationary(const ExperimentConfig& cfg, const std::filesystem::path& out, const Console& con) {
    if (!(cfg.spec.lambda > 0.0)) throw ConfigError("problem.lambda: stationary subcommand needs lambda > 0");
    const TorusGrid g(cfg.spec.dim, cfg.numerics.N);
    const auto st = solve_stationary(cfg.spec, g, cfg.initial.sample(g), stationary_options(cfg.numerics),
                                     cfg.numerics.scheme);
    write_csv_atomic(out / "solution.csv", [&](std::ostream& os) { write_csv(os, st.u); });
    write_csv_atomic(out / "residuals.csv", [&](std::ostream& os) {
        os << "correction,residual\n";
        for (std::size_t k = 0; k < st.residual_history.size(); ++k)
            os << k << ',' << format_real(st.residual_history[k]) << '\n';
    });
    const double sup = std::max(std::abs(st.u.max()), std::abs(st.u.min()));
    const double bound = cfg.spec.hamiltonian.H_0 / cfg.spec.lambda + 10.0 * cfg.numerics.tol;
    const bool ok = sup <= bound;
    con.info("stationary: residual " + format_real(st.residual) + " after " + std::to_string(st.steps) + " steps");
    con.verdict(ok, "sup bound: " + format_real(sup) + " <= " + format_real(bound));
    return ok ? exit_pass : exit_violation;
}

inline int run_ergodic(const ExperimentConfig& cfg, const std::filesystem::path& out, const Console& con) {
    const TorusGrid g(cfg.spec.dim, cfg.numerics.N);
    TwoRouteOptions o;
    if (!cfg.numerics.lambda_schedule.empty()) o.schedule = cfg.numerics.lambda_schedule;
    o.stationary = stationary_options(cfg.numerics);
    o.defect_times = cfg.numerics.defect_times;
    o.window = cfg.numerics.window;
    const auto res = two_route_constant(cfg.spec, g, o, cfg.numerics.scheme);
    write_csv_atomic(out / "ergodic.csv", [&](std::ostream& os) { res.write_csv(os); });
    write_csv_atomic(out / "summary.csv", [&](std::ostream& os) { res.write_summary_csv(os); });
    write_csv_atomic(out / "defects.csv", [&](std::ostream& os) { res.write_defects_csv(os); });
    write_csv_atomic(out / "profile.csv", [&](std::ostream& os) { write_csv(os, res.profile); });
    bool ok = true;
    for (const auto& r : res.records) {
        const double bound = res.H0 / r.lambda + 10.0 * cfg.numerics.tol;
        if (!(r.sup_norm <= bound)) {
            ok = false;
            con.verdict(false, "sup bound at lambda " + format_real(r.lambda) + ": " + format_real(r.sup_norm) +
                                   " > " + format_real(bound));
        }
    }
    con.verdict(ok, "sup bound over the discount schedule");
    con.info("ergodic: c_discount " + format_real(res.c_discount) + ", c_slope " + format_real(*res.c_slope) +
             ", gap " + format_real(*res.agreement_gap));
    return ok ? exit_pass : exit_violation;
}

inline int run_verify_all(const ExperimentConfig& cfg, const std::filesystem::path& out, const Console& con) {
    AcceptanceOptions opt;
    opt.N = cfg.numerics.N;
    opt.N_free = std::min(128, cfg.numerics.N);
    opt.seed = cfg.numerics.seeds.front();
    opt.defect_times = cfg.numerics.defect_times;
    opt.checker_samples = cfg.numerics.checker_samples;
    opt.quad_resolution = cfg.numerics.quad_resolution;
    opt.r0 = cfg.numerics.r0;
    opt.stationary = stationary_options(cfg.numerics);
    opt.scheme = cfg.numerics.scheme;
    AcceptanceSuite suite(opt);
    const auto results = suite.run(out, [&](const CriterionResult& r) { con.info(r.line()); });
    bool all = true;
    for (const auto& r : results) all = all && r.passed();
    return all ? exit_pass : exit_violation;
}

}  // namespace runner_detail

// Runs a parsed configuration; `out_dir` overrides output.directory when nonempty.
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& log, bool quiet) {
    const runner_detail::Console con{log, quiet};
    const std::filesystem::path out = cfg.output.directory;
    std::filesystem::create_directories(out);
    if (cfg.subcommand == "check") return runner_detail::run_check(cfg, out, con);
    if (cfg.subcommand == "evolve") return runner_detail::run_evolve(cfg, out, con);
    if (cfg.subcommand == "stationary") return runner_detail::run_stationary(cfg, out, con);
    if (cfg.subcommand == "ergodic") return runner_detail::run_ergodic(cfg, out, con);
    if (cfg.subcommand == "verify-all") return runner_detail::run_verify_all(cfg, out, con);
    throw ConfigError("subcommand: unknown value '" + cfg.subcommand + "'");
}

// Loads, applies overrides and runs, translating errors into exit codes.
inline int run_config_file(const std::string& path, const std::string& out_override,
                           const std::optional<std::uint64_t>& seed_override, bool quiet, std::ostream& log,
                           std::ostream& err) {
    try {
        ExperimentConfig cfg = load_config(path);
        if (!out_override.empty()) cfg.output.directory = out_override;
        if (seed_override) cfg.numerics.seeds = {*seed_override};
        return run_experiment(cfg, log, quiet);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const UsageError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const NonConvergenceError& e) {
        err << "solver did not converge: " << e.what() << '\n';
        return exit_solver;
    } catch (const BlowUpError& e) {
        err << "solver blew up at step " << e.step() << ": " << e.what() << '\n';
        return exit_solver;
    } catch (const DomainError& e) {
        err << "solver left its domain: " << e.what() << '\n';
        return exit_solver;
    }
}

}  // namespace nlhj
