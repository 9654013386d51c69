#pragma once

// Stationary problem for lambda > 0, the vanishing-discount sweep and the
// ergodic constant c of
//
//     -Tr(A D^2 w) - I^j w + H(x, Dw) = -c,
//
// obtained two ways: lambda u_lambda(x0) -> c, and the long-time slope
// u(., t) ~ w + c t of the evolution (so c = +slope with this sign of the
// cell problem; the discount route gives the same number for H = |p|^m - f0).

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "nlhj/errors.hpp"
#include "nlhj/evolution.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/local.hpp"

namespace nlhj {

struct StationaryOptions {
    double tol = 1e-8;
    std::size_t max_steps = 20'000'000;
    // The constant mode relaxes at rate lambda only. Every `correction_every`
    // steps it is removed exactly: rhs(u + k) = rhs(u) - lambda k for constants k.
    std::size_t correction_every = 25;
    double gradient_margin = 1.25;
    double min_cover = 1.0;
};

struct StationaryResult {
    GridFunction u;
    double residual = 0.0;  // sup |lambda u - Tr(A D^2 u) - I u + H| on the grid
    std::size_t steps = 0;
    std::vector<double> residual_history;  // one entry per correction
};

// Pseudo-time marching of u_t = rhs(u) until sup|rhs(u)| <= tol.
inline StationaryResult solve_stationary(Discretization& disc, const GridFunction& u_init,
                                         const StationaryOptions& opt = {}) {
    const double lam = disc.spec().lambda;
    if (!(lam > 0.0)) throw ConfigError("solve_stationary needs lambda > 0");
    if (!(opt.tol > 0.0)) throw ConfigError("stationary tolerance must be positive");
    if (!(u_init.grid() == disc.grid())) throw UsageError("initial guess lives on a different grid");
    StationaryResult res;
    GridFunction u = u_init;
    std::size_t n = 0;
    while (true) {
        const auto grads = upwind_gradients(u);
        const double bound = gradient_bound(grads);
        if (n == 0 || bound > disc.covered_gradient())
            disc.cover(std::max(opt.min_cover, opt.gradient_margin * bound));
        GridFunction r = disc.rhs(u, grads);
        if (n % opt.correction_every == 0) {
            double sup = 0.0;
            for (double v : r.values()) sup = std::max(sup, std::abs(v));
            res.residual_history.push_back(sup);
            if (sup <= opt.tol) {
                res.residual = sup;
                break;
            }
            if (n >= opt.max_steps) {
                throw NonConvergenceError("stationary solve at lambda = " + format_real(lam) + " stopped at residual " +
                                              format_real(sup) + " after " + std::to_string(n) + " steps",
                                          res.residual_history);
            }
            const double k = r.mean() / lam;
            u += k;
            r += -lam * k;
        }
        const double dt = disc.dt();
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] += dt * r[i];
            if (!std::isfinite(u[i])) throw BlowUpError("non-finite value in the stationary iteration", n);
        }
        ++n;
    }
    res.u = std::move(u);
    res.steps = n;
    return res;
}

inline StationaryResult solve_stationary(const ProblemSpec& spec, const TorusGrid& grid, const GridFunction& u_init,
                                         const StationaryOptions& opt = {}, const SchemeParams& params = {}) {
    Discretization disc(spec, grid, params);
    return solve_stationary(disc, u_init, opt);
}

struct DiscountRecord {
    double lambda = 0.0;
    double sup_norm = 0.0;
    double osc = 0.0;
    double lipschitz = 0.0;
    double lambda_u_x0 = 0.0;
    double residual = 0.0;
    std::size_t steps = 0;
};

struct ErgodicResult {
    double c_discount = 0.0;
    double c_discount_fit_residual = 0.0;
    std::optional<double> c_slope;
    std::optional<double> agreement_gap;
    GridFunction profile;  // w = u_{lambda_min} - u_{lambda_min}(x0)
    std::size_t anchor = 0;
    std::vector<DiscountRecord> records;
    // convergence defect inf_k sup|u(T) - c T - w - k| at each requested T
    std::vector<std::pair<double, double>> defects;
    double H0 = 0.0;

    void write_csv(std::ostream& os) const {
        os << "lambda,sup_norm,osc,lipschitz,lambda_u_x0,residual,steps\n";
        for (const auto& r : records)
            os << format_real(r.lambda) << ',' << format_real(r.sup_norm) << ',' << format_real(r.osc) << ','
               << format_real(r.lipschitz) << ',' << format_real(r.lambda_u_x0) << ',' << format_real(r.residual)
               << ',' << r.steps << '\n';
    }

    void write_summary_csv(std::ostream& os) const {
        os << "c_discount,c_slope,gap,fit_residual\n";
        os << format_real(c_discount) << ',' << (c_slope ? format_real(*c_slope) : "") << ','
           << (agreement_gap ? format_real(*agreement_gap) : "") << ',' << format_real(c_discount_fit_residual)
           << '\n';
    }

    void write_defects_csv(std::ostream& os) const {
        os << "T,defect\n";
        for (const auto& [T, d] : defects) os << format_real(T) << ',' << format_real(d) << '\n';
    }
};

inline std::vector<double> default_schedule() {
    std::vector<double> s;
    for (int k = 0; k <= 7; ++k) s.push_back(0.1 * std::ldexp(1.0, -k));
    return s;
}

// inf over constants k of sup |a - b - k| = osc(a - b) / 2.
inline double defect_modulo_constant(const GridFunction& a, const GridFunction& b) {
    const GridFunction diff = a - b;
    return 0.5 * (diff.max() - diff.min());
}

// Solves the stationary problem along a decreasing schedule with warm starts
// and extrapolates lambda u_lambda(x0) linearly in lambda over the last four
// points.
inline ErgodicResult vanishing_discount(const ProblemSpec& spec, const TorusGrid& grid,
                                        const std::vector<double>& schedule = default_schedule(),
                                        const StationaryOptions& opt = {}, const SchemeParams& params = {},
                                        std::size_t anchor = 0) {
    if (schedule.size() < 2) throw ConfigError("lambda schedule needs at least two values");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0)) throw ConfigError("lambda schedule values must be positive");
        if (k > 0 && !(schedule[k] < schedule[k - 1])) throw ConfigError("lambda schedule must be decreasing");
    }
    if (anchor >= grid.size()) throw UsageError("anchor index outside the grid");
    ErgodicResult out;
    out.anchor = anchor;
    out.H0 = spec.hamiltonian.H_0;
    GridFunction u(grid, 0.0);
    for (double lam : schedule) {
        ProblemSpec s = spec;
        s.lambda = lam;
        Discretization disc(s, grid, params);
        const auto r = solve_stationary(disc, u, opt);
        u = r.u;
        const auto m = metrics(u);
        out.records.push_back({lam, m.sup_norm, m.osc, m.lipschitz, lam * u[anchor], r.residual, r.steps});
    }
    const std::size_t k = std::min<std::size_t>(4, out.records.size());
    std::vector<double> xs, ys;
    for (std::size_t i = out.records.size() - k; i < out.records.size(); ++i) {
        xs.push_back(out.records[i].lambda);
        ys.push_back(out.records[i].lambda_u_x0);
    }
    const auto fit = detail::least_squares(xs, ys);
    out.c_discount = fit.intercept;
    out.c_discount_fit_residual = fit.fit_residual;
    out.profile = u - u[anchor];
    return out;
}

struct TwoRouteOptions {
    std::vector<double> schedule = default_schedule();
    StationaryOptions stationary;
    std::vector<double> defect_times{10.0, 25.0, 50.0};  // last entry is T_final
    double sample_interval = 0.05;
    std::size_t window = 50;
};

// Long evolution from u0 = 0 on top of a finished discount sweep; c_slope
// is the asymptotic slope of mean(u).
inline ErgodicResult two_route_constant(const ProblemSpec& spec, const TorusGrid& grid, ErgodicResult discount,
                                        const TwoRouteOptions& opt, const SchemeParams& params = {}) {
    if (opt.defect_times.empty()) throw ConfigError("two_route_constant needs at least one evolution time");
    if (!(discount.profile.grid() == grid)) throw UsageError("discount result lives on a different grid");
    ErgodicResult out = std::move(discount);
    out.defects.clear();
    ProblemSpec s = spec;
    s.lambda = 0.0;
    Discretization disc(s, grid, params);
    GridFunction u(grid, 0.0);
    double t = 0.0;
    EvolutionTrace last;
    for (double T : opt.defect_times) {
        if (!(T > t)) throw ConfigError("evolution times must increase");
        EvolutionOptions eo;
        eo.T_final = T - t;
        eo.early_stop = false;
        eo.window = opt.window;
        const double dt0 = disc.dt() > 0.0 ? disc.dt() : 1e-3;
        eo.sample_every = std::max<std::size_t>(1, static_cast<std::size_t>(opt.sample_interval / dt0));
        auto [next, trace] = evolve(disc, u, eo);
        u = std::move(next);
        t = T;
        out.defects.emplace_back(T, defect_modulo_constant(u, out.profile));
        last = std::move(trace);
    }
    out.c_slope = estimate_slope(last).slope;
    out.agreement_gap = std::abs(out.c_discount - *out.c_slope);
    return out;
}

inline ErgodicResult two_route_constant(const ProblemSpec& spec, const TorusGrid& grid, const TwoRouteOptions& opt = {},
                                        const SchemeParams& params = {}) {
    if (opt.defect_times.empty()) throw ConfigError("two_route_constant needs at least one evolution time");
    for (std::size_t k = 1; k < opt.defect_times.size(); ++k)
        if (!(opt.defect_times[k] > opt.defect_times[k - 1])) throw ConfigError("evolution times must increase");
    return two_route_constant(spec, grid, vanishing_discount(spec, grid, opt.schedule, opt.stationary, params), opt,
                              params);
}

struct UniquenessProbe {
    double max_distance = 0.0;
    bool informational = false;  // covering hypothesis not met: no claim is made
    std::vector<GridFunction> profiles;
};

// Evolves every initial datum together to T_final and compares the final
// profiles normalized to vanish at x0.
inline UniquenessProbe profile_uniqueness_probe(const ProblemSpec& spec, const TorusGrid& grid,
                                                const std::vector<GridFunction>& initial, double T_final,
                                                bool covering_passed, const SchemeParams& params = {},
                                                std::size_t anchor = 0) {
    if (initial.size() < 2) throw UsageError("uniqueness probe needs at least two initial data");
    ProblemSpec s = spec;
    s.lambda = 0.0;
    Discretization disc(s, grid, params);
    EvolutionOptions eo;
    eo.T_final = T_final;
    eo.early_stop = false;
    eo.sample_every = 1000;
    auto res = evolve_ensemble(disc, initial, eo);
    UniquenessProbe out;
    out.informational = !covering_passed;
    for (auto& f : res.finals) out.profiles.push_back(f - f[anchor]);
    for (std::size_t a = 0; a < out.profiles.size(); ++a)
        for (std::size_t b = a + 1; b < out.profiles.size(); ++b)
            out.max_distance = std::max(out.max_distance, sup_distance(out.profiles[a], out.profiles[b]));
    return out;
}

}  // namespace nlhj
