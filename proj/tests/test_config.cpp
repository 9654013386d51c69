#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlhj/runner.hpp"

namespace nlhj {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nlhj_test_config_" + name);
    fs::remove_all(p);
    return p;
}

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kEikonalCheck = R"({
  "subcommand": "check",
  "problem": {
    "hamiltonian": {"m": 2, "f": {"shape": "cosine", "amplitude": 1}},
    "diffusion": {"family": "sqrt_field", "a": {"shape": "cos_squared", "offset": 0.1, "amplitude": 0.1}},
    "levy": {"family": "fractional", "order": 1.0}
  },
  "numerics": {"seeds": [0, 1, 2], "checker_samples": 128, "quad_resolution": 32}
})";

TEST(ConfigParse, Defaults) {
    const auto cfg = parse_config_text(R"({"subcommand": "evolve"})");
    EXPECT_EQ(cfg.subcommand, "evolve");
    EXPECT_EQ(cfg.spec.dim, 1);
    EXPECT_EQ(cfg.numerics.N, 128);
    EXPECT_EQ(cfg.numerics.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
    EXPECT_EQ(cfg.output.directory, "out");
    EXPECT_EQ(cfg.initial.family, "zero");
}

TEST(ConfigParse, ReadsProblemAndNumerics) {
    const auto cfg = parse_config_text(R"({
      "subcommand": "ergodic",
      "problem": {"lambda": 0.25, "hamiltonian": {"m": 3, "f": -0.5},
                  "levy": {"family": "atomic", "atoms": [{"z": 0.25, "mass": 2}]},
                  "initial": {"family": "sine", "amplitude": 0.2}},
      "numerics": {"N": 64, "lambda_schedule": [0.1, 0.05], "defect_times": [1, 2]},
      "output": {"directory": "somewhere", "sample_every": 3}})");
    EXPECT_DOUBLE_EQ(cfg.spec.lambda, 0.25);
    EXPECT_DOUBLE_EQ(cfg.spec.hamiltonian.m, 3.0);
    ASSERT_EQ(cfg.spec.levy.atoms.size(), 1u);
    EXPECT_DOUBLE_EQ(cfg.spec.levy.atoms[0].z[0], 0.25);
    EXPECT_DOUBLE_EQ(cfg.spec.levy.atoms[0].mass, 2.0);
    EXPECT_EQ(cfg.numerics.lambda_schedule, (std::vector<double>{0.1, 0.05}));
    EXPECT_EQ(cfg.output.sample_every, 3u);
    const TorusGrid g(1, 8);
    EXPECT_NEAR(cfg.initial.sample(g)[2], 0.2, 1e-15);
}

TEST(ConfigParse, OrderOutOfRangeNamesKeyAndRange) {
    const std::string msg = config_error(R"({"subcommand": "check",
        "problem": {"levy": {"family": "fractional", "order": 2.5}}})");
    EXPECT_NE(msg.find("problem.levy.order"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2.5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(0,2)"), std::string::npos) << msg;
}

TEST(ConfigParse, ListsEveryOffendingKey) {
    const std::string msg = config_error(R"({"subcommand": "check", "colour": 1,
        "problem": {"levy": {"family": "fractional", "order": 0}, "hamiltonian": {"m": 1}},
        "numerics": {"N": 2, "tol": -1, "defect_times": [5, 1]}})");
    for (const char* key : {"colour", "problem.levy.order", "problem.hamiltonian.m", "numerics.N", "numerics.tol",
                            "numerics.defect_times"})
        EXPECT_NE(msg.find(key), std::string::npos) << key << "\n" << msg;
}

TEST(ConfigParse, RejectsUnknownKeysAndValues) {
    EXPECT_NE(config_error(R"({"subcommand": "check", "numerics": {"Nx": 3}})").find("numerics.Nx: unknown key"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"subcommand": "solve"})").find("subcommand"), std::string::npos);
    EXPECT_NE(config_error(R"({"problem": {}})").find("subcommand: missing"), std::string::npos);
    EXPECT_NE(config_error("{not json").find("not valid JSON"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(ConfigParse, NegativeDiffusionFieldRejected) {
    const std::string msg = config_error(R"({"subcommand": "check",
        "problem": {"diffusion": {"family": "sqrt_field", "a": {"shape": "cosine", "amplitude": 1}}}})");
    EXPECT_NE(msg.find("problem.diffusion.a"), std::string::npos) << msg;
}

TEST(Runner, CheckOnEikonalPassesWithFourRowsPerSeed) {
    const auto dir = scratch("check");
    auto cfg = parse_config_text(kEikonalCheck);
    cfg.output.directory = dir.string();
    std::ostringstream log;
    EXPECT_EQ(run_experiment(cfg, log, false), exit_pass) << log.str();
    std::istringstream csv(slurp(dir / "checks.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "check,seed,passed,worst_slack,witness");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        EXPECT_NE(line.find(",pass,"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 12);
}

TEST(Runner, CheckReportsViolationWithExitOne) {
    const auto dir = scratch("check_fail");
    auto cfg = parse_config_text(kEikonalCheck);
    cfg.spec.hamiltonian.K = 0.0;
    cfg.numerics.seeds = {0};
    cfg.output.directory = dir.string();
    std::ostringstream log;
    EXPECT_EQ(run_experiment(cfg, log, false), exit_violation);
    EXPECT_NE(log.str().find("FAIL check_H1"), std::string::npos) << log.str();
}

TEST(Runner, ErgodicConstantSourceRecoversConstant) {
    const auto dir = scratch("ergodic");
    auto cfg = parse_config_text(R"({"subcommand": "ergodic",
      "problem": {"hamiltonian": {"m": 2, "f": -0.7},
                  "diffusion": {"family": "sqrt_field", "a": {"shape": "cos_squared", "offset": 0.1, "amplitude": 0.1}},
                  "levy": {"family": "fractional", "order": 1.0},
                  "initial": {"family": "cosine", "amplitude": 0.3}},
      "numerics": {"N": 64, "defect_times": [1, 2, 4], "window": 10}})");
    cfg.output.directory = dir.string();
    std::ostringstream log;
    ASSERT_EQ(run_experiment(cfg, log, true), exit_pass);
    EXPECT_TRUE(log.str().empty());
    for (const char* f : {"ergodic.csv", "summary.csv", "defects.csv", "profile.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    std::istringstream summary(slurp(dir / "summary.csv"));
    std::string header, row;
    std::getline(summary, header);
    std::getline(summary, row);
    EXPECT_EQ(header, "c_discount,c_slope,gap,fit_residual");
    const double c_discount = std::stod(row.substr(0, row.find(',')));
    const double c_slope = std::stod(row.substr(row.find(',') + 1));
    EXPECT_NEAR(c_discount, -0.7, 1e-10);
    EXPECT_NEAR(c_slope, -0.7, 1e-10);
}

TEST(Runner, StationaryNeedsPositiveDiscount) {
    auto cfg = parse_config_text(R"({"subcommand": "stationary"})");
    cfg.output.directory = scratch("stationary_zero").string();
    std::ostringstream log;
    EXPECT_THROW(run_experiment(cfg, log, true), ConfigError);
}

TEST(Runner, StationaryAndEvolveWriteOutputs) {
    const auto dir = scratch("stationary");
    auto cfg = parse_config_text(R"({"subcommand": "stationary",
      "problem": {"lambda": 1.0, "levy": {"family": "fractional", "order": 1.0}},
      "numerics": {"N": 32}})");
    cfg.output.directory = dir.string();
    std::ostringstream log;
    EXPECT_EQ(run_experiment(cfg, log, false), exit_pass);
    EXPECT_NE(log.str().find("PASS sup bound"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "solution.csv"));
    EXPECT_TRUE(fs::exists(dir / "residuals.csv"));

    cfg.subcommand = "evolve";
    cfg.numerics.T_final = 0.1;
    EXPECT_EQ(run_experiment(cfg, log, true), exit_pass);
    EXPECT_TRUE(fs::exists(dir / "trace.csv"));
    EXPECT_TRUE(fs::exists(dir / "final.csv"));
}

TEST(Runner, OutputsAreByteIdenticalAcrossRuns) {
    auto cfg = parse_config_text(R"({"subcommand": "evolve",
      "problem": {"levy": {"family": "fractional", "order": 0.5}, "initial": {"family": "cosine", "amplitude": 0.4}},
      "numerics": {"N": 64, "T_final": 0.2}})");
    std::string first;
    for (int run = 0; run < 2; ++run) {
        const auto dir = scratch("determinism_" + std::to_string(run));
        cfg.output.directory = dir.string();
        std::ostringstream log;
        ASSERT_EQ(run_experiment(cfg, log, true), exit_pass);
        const std::string now = slurp(dir / "trace.csv") + slurp(dir / "final.csv");
        if (run == 0)
            first = now;
        else
            EXPECT_EQ(now, first);
    }
}

TEST(Runner, FileEntryMapsErrorsToExitCodes) {
    const auto dir = scratch("file_entry");
    fs::create_directories(dir);
    std::ostringstream log, err;
    {
        std::ofstream(dir / "bad.json") << R"({"subcommand": "check", "problem": {"levy": {"order": 2.5, "family": "fractional"}}})";
    }
    EXPECT_EQ(run_config_file((dir / "bad.json").string(), "", std::nullopt, false, log, err), exit_config);
    EXPECT_NE(err.str().find("problem.levy.order"), std::string::npos);
    {
        std::ofstream(dir / "stiff.json") << R"({"subcommand": "stationary", "problem": {"lambda": 0.01},
          "numerics": {"N": 32, "max_steps": 5}})";
    }
    EXPECT_EQ(run_config_file((dir / "stiff.json").string(), (dir / "o").string(), std::nullopt, true, log, err),
              exit_solver);
}

#if defined(NLHJ_CLI_PATH) && defined(NLHJ_CONFIG_DIR)
int run_cli(const std::string& args) {
    const int status = std::system((std::string(NLHJ_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodesFromShippedConfigs) {
    const auto dir = scratch("cli");
    const std::string cfgdir = NLHJ_CONFIG_DIR;
    EXPECT_EQ(run_cli(cfgdir + "/eikonal_check.json --quiet --seed 4 --out " + (dir / "check").string()), 0);
    EXPECT_NE(slurp(dir / "check" / "checks.csv").find("check_H1,4,pass"), std::string::npos);
    EXPECT_EQ(run_cli(cfgdir + "/bad_order.json --out " + (dir / "bad").string()), 2);
    EXPECT_EQ(run_cli("--no-such-flag"), 2);
    EXPECT_EQ(run_cli(cfgdir + "/constant_source_ergodic.json --out " + (dir / "erg").string()), 0);
}
#endif

}  // namespace
}  // namespace nlhj
