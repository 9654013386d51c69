// Acceptance suite runner: one PASS/FAIL line per criterion, exit code 0 only
// when every criterion passes.

#include <iostream>

#include <CLI11.hpp>

#include "nlhj/acceptance.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nlhj acceptance suite"};
    std::string out = "acceptance_out";
    nlhj::AcceptanceOptions opt;
    bool no_determinism = false;
    app.add_option("--out", out, "directory for the CSV artifacts");
    app.add_option("--seed", opt.seed, "base seed");
    app.add_flag("--no-determinism", no_determinism, "skip the re-run of criterion 11");
    CLI11_PARSE(app, argc, argv);
    opt.determinism = !no_determinism;

    nlhj::AcceptanceSuite suite(opt);
    const auto results = suite.run(out, [](const nlhj::CriterionResult& r) { std::cout << r.line() << std::endl; });
    int passed = 0;
    for (const auto& r : results) passed += r.passed() ? 1 : 0;
    std::cout << passed << "/" << results.size() << " criteria pass" << std::endl;
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}
