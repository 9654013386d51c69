// nlhj CONFIG [--out DIR] [--seed INT] [--quiet]
// Exit codes: 0 all verdicts pass, 1 invariant violation, 2 configuration
// error, 3 solver non-convergence or blow-up.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "nlhj/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monotone solver and verification harness for nonlocal Hamilton-Jacobi equations on the torus"};
    std::string config, out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("config", config, "experiment configuration (JSON)")->required();
    app.add_option("--out", out, "output directory, overrides output.directory");
    app.add_option("--seed", seed, "seed, overrides numerics.seeds");
    app.add_flag("--quiet", quiet, "suppress per-verdict lines");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nlhj::exit_config;
    }
    return nlhj::run_config_file(config, out, seed, quiet, std::cout, std::cerr);
}
