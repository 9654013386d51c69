#pragma once

// The acceptance suite: eleven property-based criteria at desk scale. Each
// criterion writes its CSV artifacts into a run directory; the last one
// re-runs the first ten into a second directory and compares every file
// byte for byte. Runtime limits are judged on wall time, which is reported on
// the console only so the CSVs stay reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlhj/ergodic.hpp"
#include "nlhj/evolution.hpp"
#include "nlhj/instances.hpp"
#include "nlhj/io.hpp"
#include "nlhj/model.hpp"
#include "nlhj/nonlocal.hpp"
#include "nlhj/verify.hpp"

namespace nlhj {

struct AcceptanceOptions {
    int N = 256;       // resolution where a criterion pins one
    int N_free = 128;  // resolution where a criterion leaves it open
    int N_pairs = 64;  // resolution of the many-trajectory ordering criteria
    std::uint64_t seed = 0;
    std::vector<double> defect_times{10.0, 25.0, 50.0};  // last entry is the long horizon T
    double comparison_T = 5.0;
    int checker_samples = 256;
    int quad_resolution = 64;
    double r0 = 0.1;
    bool determinism = true;
    StationaryOptions stationary;
    SchemeParams scheme;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool property = false;  // the numerical statement itself
    double seconds = 0.0;
    double limit = 0.0;  // 0: no runtime limit
    std::string detail;

    bool runtime_ok() const noexcept { return limit <= 0.0 || seconds <= limit; }
    bool passed() const noexcept { return property && runtime_ok(); }

    std::string line() const {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(2);
        os << (passed() ? "PASS" : "FAIL") << " criterion " << id << " [" << name << "] " << detail << " (" << seconds
           << " s";
        if (limit > 0.0) os << ", limit " << limit << " s" << (runtime_ok() ? "" : " EXCEEDED");
        os << ')';
        return os.str();
    }
};

namespace acceptance_detail {

using Clock = std::chrono::steady_clock;

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

inline GridFunction random_smooth(const TorusGrid& g, std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), ph(0.0, kTwoPi);
    GridFunction u(g, 0.0);
    for (int k = 1; k <= 3; ++k) {
        const double a = scale * amp(rng) / k, p = ph(rng);
        for (std::size_t i = 0; i < g.size(); ++i) u[i] += a * std::cos(kTwoPi * k * g.point(i)[0] + p);
    }
    return u;
}

// Nonnegative smooth perturbation with a random centre.
inline GridFunction random_bump(const TorusGrid& g, std::mt19937_64& rng, double height) {
    std::uniform_real_distribution<double> c(0.0, 1.0), w(0.1, 0.25);
    const double centre = c(rng), width = w(rng);
    return GridFunction::sample(g, [&](const Point& x) {
        const double r = torus_distance(x, Point{centre, 0.0}, 1) / width;
        return height * std::exp(-r * r);
    });
}

inline std::vector<std::string> list_files(const std::filesystem::path& dir) {
    std::vector<std::string> out;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace acceptance_detail

class AcceptanceSuite {
public:
    explicit AcceptanceSuite(AcceptanceOptions opt) : opt_(std::move(opt)) {}

    // Criteria 1..10 into `dir`, reporting each result as it completes.
    std::vector<CriterionResult> run_properties(const std::filesystem::path& dir,
                                                const std::function<void(const CriterionResult&)>& report = {}) {
        discount_.reset();
        discount_seconds_ = 0.0;
        std::vector<CriterionResult> out;
        const std::vector<std::pair<double, CriterionResult (AcceptanceSuite::*)(const std::filesystem::path&)>> plan{
            {5.0, &AcceptanceSuite::c1_assumptions},    {10.0, &AcceptanceSuite::c2_nonlocal},
            {20.0, &AcceptanceSuite::c3_bernstein},     {60.0, &AcceptanceSuite::c4_comparison},
            {60.0, &AcceptanceSuite::c5_sup_bound},     {300.0, &AcceptanceSuite::c6_uniform_bounds},
            {120.0, &AcceptanceSuite::c7_eikonal},      {600.0, &AcceptanceSuite::c8_two_route},
            {60.0, &AcceptanceSuite::c9_kappa},         {300.0, &AcceptanceSuite::c10_covering}};
        for (std::size_t k = 0; k < plan.size(); ++k) {
            const auto t0 = acceptance_detail::Clock::now();
            CriterionResult r;
            try {
                r = (this->*plan[k].second)(dir);
            } catch (const std::exception& e) {
                r.property = false;
                r.detail = std::string("error: ") + e.what();
            }
            r.id = static_cast<int>(k + 1);
            if (r.name.empty()) r.name = names()[k];
            r.seconds = std::chrono::duration<double>(acceptance_detail::Clock::now() - t0).count();
            if (r.id == 8) r.seconds += discount_seconds_;
            r.limit = plan[k].first;
            if (report) report(r);
            out.push_back(std::move(r));
        }
        write_csv_atomic(dir / "criteria.csv", [&](std::ostream& os) {
            os << "id,name,passed,detail\n";
            for (const auto& r : out)
                os << r.id << ',' << detail::csv_field(r.name) << ',' << (r.property ? "pass" : "fail") << ','
                   << detail::csv_field(r.detail) << '\n';
        });
        return out;
    }

    // The full suite: criteria 1..10 in `root`/run1, then the determinism
    // re-run in `root`/run2.
    std::vector<CriterionResult> run(const std::filesystem::path& root,
                                     const std::function<void(const CriterionResult&)>& report = {}) {
        const auto run1 = root / "run1";
        std::filesystem::remove_all(run1);
        auto results = run_properties(run1, report);
        CriterionResult c11;
        c11.id = 11;
        c11.name = names()[10];
        if (opt_.determinism) {
            const auto t0 = acceptance_detail::Clock::now();
            const auto run2 = root / "run2";
            std::filesystem::remove_all(run2);
            run_properties(run2);
            c11.seconds = std::chrono::duration<double>(acceptance_detail::Clock::now() - t0).count();
            const auto f1 = acceptance_detail::list_files(run1), f2 = acceptance_detail::list_files(run2);
            std::string mismatch;
            if (f1 != f2) mismatch = "file lists differ";
            for (const auto& f : f1) {
                if (!mismatch.empty()) break;
                if (acceptance_detail::slurp(run1 / f) != acceptance_detail::slurp(run2 / f)) mismatch = f + " differs";
            }
            c11.property = mismatch.empty() && !f1.empty();
            c11.detail = c11.property ? std::to_string(f1.size()) + " CSV files bit-identical across two runs"
                                      : "re-run mismatch: " + (mismatch.empty() ? std::string("no files") : mismatch);
        } else {
            c11.detail = "determinism re-run disabled";
        }
        if (report) report(c11);
        results.push_back(c11);
        return results;
    }

    static const std::vector<std::string>& names() {
        static const std::vector<std::string> n{"assumption suite",
                                                "nonlocal operator accuracy",
                                                "exponential change of variables",
                                                "discrete comparison principle",
                                                "discounted sup bound",
                                                "lambda-uniform oscillation and Lipschitz bounds",
                                                "ergodic constant, analytic anchor",
                                                "two-route agreement",
                                                "kappa monotonicity",
                                                "covering and uniqueness",
                                                "determinism"};
        return n;
    }

private:
    using Path = std::filesystem::path;

    CriterionResult c1_assumptions(const Path& dir) {
        ProblemSpec spec = instances::eikonal();
        spec.hamiltonian.K = 0.0;  // declared constants of the criterion; b_m = (m - 1) min a = 1
        CriterionResult r;
        std::ostringstream csv;
        csv << "check,seed,passed,worst_slack,witness\n";
        int total = 0, ok = 0;
        std::string first_fail;
        auto row = [&](const CheckReport& rep, std::uint64_t seed) {
            ++total;
            ok += rep.passed ? 1 : 0;
            if (!rep.passed && first_fail.empty())
                first_fail = rep.name + " seed " + std::to_string(seed) + ": " + rep.witness;
            csv << rep.name << ',' << seed << ',' << (rep.passed ? "pass" : "fail") << ','
                << format_real(rep.worst_slack) << ',' << detail::csv_field(rep.witness) << '\n';
        };
        for (std::uint64_t s = opt_.seed; s < opt_.seed + 3; ++s) {
            row(check_diffusion(spec, opt_.checker_samples, s), s);
            row(check_H1(spec, opt_.checker_samples, s), s);
            row(check_H2prime(spec, opt_.checker_samples, s), s);
            row(combined(check_levy(spec, opt_.quad_resolution, 64, s)), s);
        }
        write_file_atomic(dir / "c01_assumptions.csv", csv.str());
        r.property = ok == total;
        r.detail = std::to_string(ok) + "/" + std::to_string(total) + " checks pass (b_m = " +
                   acceptance_detail::num(spec.hamiltonian.b_m) + ", K = 0)" +
                   (first_fail.empty() ? "" : "; first failure " + first_fail);
        return r;
    }

    CriterionResult c2_nonlocal(const Path& dir) {
        const TorusGrid g(1, opt_.N);
        const auto u = GridFunction::sample(g, [](const Point& x) { return std::cos(kTwoPi * x[0]); });
        CriterionResult r;
        r.property = true;
        std::ostringstream csv, det;
        csv << "order,Q,relative_error\n";
        for (double s : {0.5, 1.0, 1.5}) {
            ProblemSpec spec = instances::eikonal_fractional();
            spec.levy.order = s;
            const auto ref = fractional_reference(u, s);
            const double scale = std::max(std::abs(ref.max()), std::abs(ref.min()));
            double e[2];
            int k = 0;
            for (int Q : {opt_.scheme.nodes_per_decade, 2 * opt_.scheme.nodes_per_decade}) {
                e[k] = sup_distance(apply_Ij(build_table(spec, g, Q), u), ref) / scale;
                csv << format_real(s) << ',' << Q << ',' << format_real(e[k]) << '\n';
                ++k;
            }
            if (!(e[0] <= 1e-2 && e[1] < e[0])) r.property = false;
            det << (det.tellp() > 0 ? "; " : "") << "order " << s << ": " << acceptance_detail::num(e[0]) << " -> "
                << acceptance_detail::num(e[1]);
        }
        write_file_atomic(dir / "c02_nonlocal.csv", csv.str());
        r.detail = "relative sup error Q -> 2Q: " + det.str();
        return r;
    }

    CriterionResult c3_bernstein(const Path& dir) {
        const ProblemSpec spec = instances::eikonal(1.0);
        auto v_on = [](const TorusGrid& g) {
            return GridFunction::sample(g, [](const Point& x) { return 0.3 * std::cos(kTwoPi * x[0]); });
        };
        const TorusGrid g1(1, opt_.N), g2(1, 2 * opt_.N);
        const double nl = nonlocal_identity_defect(build_table(spec, g1, opt_.scheme.nodes_per_decade), v_on(g1));
        const double d1 = bernstein_identity_check(spec, g1, {v_on(g1)}, opt_.scheme).max_relative_defect;
        const double d2 = bernstein_identity_check(spec, g2, {v_on(g2)}, opt_.scheme).max_relative_defect;
        std::ostringstream csv;
        csv << "quantity,N,defect\n"
            << "nonlocal," << opt_.N << ',' << format_real(nl) << '\n'
            << "full_equation," << opt_.N << ',' << format_real(d1) << '\n'
            << "full_equation," << 2 * opt_.N << ',' << format_real(d2) << '\n';
        write_file_atomic(dir / "c03_bernstein.csv", csv.str());
        CriterionResult r;
        r.property = nl <= 1e-8 && d1 <= 2e-2 && d2 <= 0.5 * d1;
        r.detail = "nonlocal " + acceptance_detail::num(nl) + ", full " + acceptance_detail::num(d1) + " -> " +
                   acceptance_detail::num(d2) + " (ratio " + acceptance_detail::num(d2 / d1) + ")";
        return r;
    }

    CriterionResult c4_comparison(const Path& dir) {
        const TorusGrid g(1, opt_.N_pairs);
        std::mt19937_64 rng(opt_.seed);
        std::vector<std::pair<GridFunction, GridFunction>> pairs;
        std::uniform_real_distribution<double> gap(0.0, 0.1);
        for (int k = 0; k < 20; ++k) {
            GridFunction lo = acceptance_detail::random_smooth(g, rng, 0.15);
            GridFunction hi = lo + acceptance_detail::random_bump(g, rng, 0.2) + gap(rng);
            pairs.emplace_back(std::move(lo), std::move(hi));
        }
        const auto res = comparison_harness(instances::mixed(), g, pairs, opt_.comparison_T, opt_.scheme);
        std::ostringstream csv;
        csv << "pairs,T,steps,max_violation,worst_pair,worst_time\n"
            << pairs.size() << ',' << format_real(opt_.comparison_T) << ',' << res.steps << ','
            << format_real(res.max_violation) << ',' << res.worst_pair << ',' << format_real(res.worst_time) << '\n';
        write_file_atomic(dir / "c04_comparison.csv", csv.str());
        CriterionResult r;
        r.property = res.max_violation <= 1e-12;
        r.detail = "20 pairs, " + std::to_string(res.steps) + " steps, max ordering violation " +
                   acceptance_detail::num(res.max_violation);
        return r;
    }

    CriterionResult c5_sup_bound(const Path& dir) {
        const TorusGrid g(1, opt_.N);
        CriterionResult r;
        r.property = true;
        std::ostringstream csv, det;
        csv << "lambda,sup_norm,bound,residual,steps\n";
        for (double lam : {1.0, 0.1, 0.01}) {
            const ProblemSpec spec = instances::mixed(lam);
            const auto st = solve_stationary(spec, g, GridFunction(g, 0.0), opt_.stationary, opt_.scheme);
            const double sup = std::max(std::abs(st.u.max()), std::abs(st.u.min()));
            const double bound = spec.hamiltonian.H_0 / lam;
            if (!(sup <= bound + 1e-5)) r.property = false;
            csv << format_real(lam) << ',' << format_real(sup) << ',' << format_real(bound) << ','
                << format_real(st.residual) << ',' << st.steps << '\n';
            det << (det.tellp() > 0 ? ", " : "") << "lambda " << lam << ": " << acceptance_detail::num(sup) << " <= "
                << acceptance_detail::num(bound);
        }
        write_file_atomic(dir / "c05_sup_bound.csv", csv.str());
        r.detail = det.str();
        return r;
    }

    const ErgodicResult& mixed_discount() {
        if (!discount_) {
            const auto t0 = acceptance_detail::Clock::now();
            discount_ = vanishing_discount(instances::mixed(), TorusGrid(1, opt_.N), default_schedule(),
                                           opt_.stationary, opt_.scheme);
            discount_seconds_ = std::chrono::duration<double>(acceptance_detail::Clock::now() - t0).count();
        }
        return *discount_;
    }

    CriterionResult c6_uniform_bounds(const Path& dir) {
        const ErgodicResult& res = mixed_discount();
        write_csv_atomic(dir / "c06_discount.csv", [&](std::ostream& os) { res.write_csv(os); });
        double lo = kInf, hi = 0.0, lip_max = 0.0;
        for (const auto& rec : res.records) {
            lip_max = std::max(lip_max, rec.lipschitz);
            if (rec.lambda <= 0.0125 * (1 + 1e-12)) {
                lo = std::min(lo, rec.osc);
                hi = std::max(hi, rec.osc);
            }
        }
        const double lip0 = res.records.front().lipschitz;
        CriterionResult r;
        r.property = hi / lo <= 1.1 && lip_max <= 2.0 * lip0;
        r.detail = "osc max/min on tail " + acceptance_detail::num(hi / lo) + ", max Lipschitz / Lipschitz at 0.1 " +
                   acceptance_detail::num(lip_max / lip0);
        return r;
    }

    TwoRouteOptions two_route_options() const {
        TwoRouteOptions o;
        o.stationary = opt_.stationary;
        o.defect_times = opt_.defect_times;
        return o;
    }

    CriterionResult c7_eikonal(const Path& dir) {
        const auto res =
            two_route_constant(instances::first_order_eikonal(), TorusGrid(1, opt_.N), two_route_options(), opt_.scheme);
        write_csv_atomic(dir / "c07_eikonal.csv", [&](std::ostream& os) { res.write_summary_csv(os); });
        CriterionResult r;
        r.property = std::abs(res.c_discount + 1.0) <= 5e-2 && std::abs(*res.c_slope + 1.0) <= 5e-2;
        r.detail = "c_discount " + acceptance_detail::num(res.c_discount) + ", c_slope " +
                   acceptance_detail::num(*res.c_slope) + " vs min f = -1";
        return r;
    }

    CriterionResult c8_two_route(const Path& dir) {
        const TorusGrid g(1, opt_.N);
        const auto res = two_route_constant(instances::mixed(), g, mixed_discount(), two_route_options(), opt_.scheme);
        write_csv_atomic(dir / "c08_two_route.csv", [&](std::ostream& os) { res.write_summary_csv(os); });
        write_csv_atomic(dir / "c08_defects.csv", [&](std::ostream& os) { res.write_defects_csv(os); });
        write_csv_atomic(dir / "c08_profile.csv", [&](std::ostream& os) { write_csv(os, res.profile); });
        bool decreasing = true;
        std::string series;
        for (std::size_t k = 0; k < res.defects.size(); ++k) {
            if (k > 0 && !(res.defects[k].second <= res.defects[k - 1].second + 1e-12)) decreasing = false;
            series += (k ? ", " : "") + acceptance_detail::num(res.defects[k].second);
        }
        CriterionResult r;
        r.property = *res.agreement_gap <= 5e-2 && decreasing;
        r.detail = "gap " + acceptance_detail::num(*res.agreement_gap) + " (c = " +
                   acceptance_detail::num(res.c_discount) + "), defects " + series;
        return r;
    }

    CriterionResult c9_kappa(const Path& dir) {
        const TorusGrid g(1, opt_.N_pairs);
        std::mt19937_64 rng(opt_.seed + 9);
        std::vector<GridFunction> states;
        const int pairs = 5;
        for (int k = 0; k < pairs; ++k) {
            GridFunction v = acceptance_detail::random_smooth(g, rng, 0.15);
            GridFunction u = v + acceptance_detail::random_bump(g, rng, 0.2);
            states.push_back(std::move(u));
            states.push_back(std::move(v));
        }
        auto kappa = [&](const std::vector<GridFunction>& s, int k) {
            double m = -kInf;
            for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, s[2 * k][i] - s[2 * k + 1][i]);
            return m;
        };
        std::vector<double> last(pairs);
        for (int k = 0; k < pairs; ++k) last[k] = kappa(states, k);
        double max_increase = 0.0;
        std::ostringstream csv;
        csv << "pair,t,kappa\n";
        for (int k = 0; k < pairs; ++k) csv << k << ",0," << format_real(last[k]) << '\n';
        double next_sample = 0.25;
        EvolutionOptions eo;
        eo.T_final = opt_.comparison_T;
        eo.early_stop = false;
        eo.sample_every = 1000;
        eo.on_step = [&](double t, const std::vector<GridFunction>& s) {
            const bool sample = t >= next_sample || t == eo.T_final;
            for (int k = 0; k < pairs; ++k) {
                const double now = kappa(s, k);
                max_increase = std::max(max_increase, now - last[k]);
                last[k] = now;
                if (sample) csv << k << ',' << format_real(t) << ',' << format_real(now) << '\n';
            }
            if (sample) next_sample += 0.25;
        };
        Discretization disc(instances::mixed(), g, opt_.scheme);
        evolve_ensemble(disc, std::move(states), eo);
        write_file_atomic(dir / "c09_kappa.csv", csv.str());
        CriterionResult r;
        r.property = max_increase <= 1e-10;
        r.detail = "5 pairs, max per-step increase of kappa " + acceptance_detail::num(max_increase);
        return r;
    }

    CriterionResult c10_covering(const Path& dir) {
        const TorusGrid g(1, opt_.N);
        const auto mixed = covering_check(instances::mixed(), g, opt_.r0);
        const auto atomic = covering_check(instances::atomic_degenerate(), g, opt_.r0);
        const ProblemSpec m2 = instances::mixed(0.0, 2.0);
        const auto m2_cover = covering_check(m2, g, opt_.r0);
        const TorusGrid gp(1, opt_.N_free);
        const auto u1 = GridFunction::sample(gp, [](const Point& x) { return 0.5 * std::sin(kTwoPi * x[0]); });
        const auto probe = profile_uniqueness_probe(m2, gp, {GridFunction(gp, 0.0), u1}, opt_.defect_times.back(),
                                                    m2_cover.passed, opt_.scheme);
        std::vector<Verdict> vs{
            {"covering", "mixed", mixed.passed, mixed.witness, static_cast<double>(mixed.failures)},
            {"covering", "atomic_degenerate", atomic.passed, atomic.witness, static_cast<double>(atomic.failures)},
            {"uniqueness_probe", "mixed_m2", !probe.informational && probe.max_distance <= 1e-2,
             probe.informational ? "informational" : "", probe.max_distance}};
        write_csv_atomic(dir / "c10_covering.csv", [&](std::ostream& os) { write_verdicts_csv(os, vs); });
        CriterionResult r;
        r.property = mixed.passed && !atomic.passed && !atomic.witness.empty() && vs[2].passed;
        r.detail = std::string("mixed covering ") + (mixed.passed ? "passes" : "fails") + ", atomic covering " +
                   (atomic.passed ? "passes" : "fails (" + atomic.witness + ")") + ", profile distance " +
                   acceptance_detail::num(probe.max_distance);
        return r;
    }

    AcceptanceOptions opt_;
    std::optional<ErgodicResult> discount_;
    double discount_seconds_ = 0.0;
};

}  // namespace nlhj
