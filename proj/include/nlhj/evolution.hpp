#pragma once

// Explicit time marching of
//
//     u_t - Tr(A D^2 u) - I^j u + H(x, Du) = 0   (plus lambda u when lambda > 0)
//
// with trajectory metrics. Several initial data can be advanced together on
// one Discretization; they then share theta and every time step, which is
// what makes discrete comparison statements about them meaningful.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlhj/errors.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/local.hpp"

namespace nlhj {

struct EvolutionOptions {
    double T_final = 1.0;
    std::size_t sample_every = 10;
    std::size_t window = 50;
    std::size_t theta_refresh = 100;
    bool early_stop = true;
    double stationarity_tol = 1e-9;
    std::size_t stationarity_count = 10;
    bool store_states = false;
    double gradient_margin = 1.25;  // theta covers this multiple of the observed gradient
    double min_cover = 1.0;         // theta never covers less than this gradient magnitude
    // called after every step with the current time and all ensemble states
    std::function<void(double, const std::vector<GridFunction>&)> on_step;
};

enum class EvolutionStatus { completed, converged_modulo_constant };

inline const char* to_string(EvolutionStatus s) {
    return s == EvolutionStatus::completed ? "completed" : "converged_modulo_constant";
}

struct TraceRecord {
    double t = 0.0;
    double osc = 0.0;
    double sup_norm = 0.0;
    double lipschitz_space = 0.0;
    double lipschitz_time = 0.0;  // max |u^{n+1} - u^n| / dt over the step ending at t
    double running_slope = 0.0;   // least-squares slope of mean(u) over the trailing window
    double step_residual = 0.0;   // sup |u^{n+1} - u^n - mean(u^{n+1} - u^n)|
    double mean = 0.0;
};

struct EvolutionTrace {
    std::size_t window = 50;
    std::vector<TraceRecord> records;
    std::vector<GridFunction> states;  // filled when EvolutionOptions::store_states is set
    EvolutionStatus status = EvolutionStatus::completed;
    std::size_t steps = 0;
    double theta_sup = 0.0;
    double final_dt = 0.0;

    void write_csv(std::ostream& os) const {
        os << "t,osc,sup_norm,lip_space,lip_time,slope,residual,mean\n";
        for (const auto& r : records)
            os << format_real(r.t) << ',' << format_real(r.osc) << ',' << format_real(r.sup_norm) << ','
               << format_real(r.lipschitz_space) << ',' << format_real(r.lipschitz_time) << ','
               << format_real(r.running_slope) << ',' << format_real(r.step_residual) << ','
               << format_real(r.mean) << '\n';
    }
};

struct SlopeEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    double fit_residual = 0.0;  // max |mean - fit| over the window
};

namespace detail {

inline SlopeEstimate least_squares(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    // centered sums for conditioning
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tm += t[i];
        ym += y[i];
    }
    tm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
    }
    SlopeEstimate e;
    e.slope = stt > 0.0 ? sty / stt : 0.0;
    e.intercept = ym - e.slope * tm;
    for (std::size_t i = 0; i < n; ++i)
        e.fit_residual = std::max(e.fit_residual, std::abs(y[i] - (e.intercept + e.slope * t[i])));
    return e;
}

inline double trailing_slope(const std::vector<TraceRecord>& recs, std::size_t window) {
    if (recs.size() < 2) return 0.0;
    const std::size_t k = std::min(window, recs.size());
    std::vector<double> t, y;
    for (std::size_t i = recs.size() - k; i < recs.size(); ++i) {
        t.push_back(recs[i].t);
        y.push_back(recs[i].mean);
    }
    return least_squares(t, y).slope;
}

inline void check_finite(const GridFunction& u, std::size_t step) {
    for (double v : u.values())
        if (!std::isfinite(v)) throw BlowUpError("non-finite value in the evolved state", step);
}

}  // namespace detail

// u^{n+1} = u^n + dt * rhs(u^n). Throws BlowUpError on a non-finite result.
inline GridFunction step(const Discretization& disc, const GridFunction& u, double dt, std::size_t step_index = 0) {
    GridFunction r = disc.rhs(u);
    std::vector<double> next(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        next[i] = u[i] + dt * r[i];
        if (!std::isfinite(next[i])) throw BlowUpError("non-finite value in the evolved state", step_index);
    }
    return GridFunction(u.grid(), std::move(next));
}

struct EnsembleResult {
    std::vector<GridFunction> finals;
    std::vector<EvolutionTrace> traces;
};

// Advances every state to T_final with a shared theta and time step. Early
// termination needs every member to be profile-stationary.
inline EnsembleResult evolve_ensemble(Discretization& disc, std::vector<GridFunction> states,
                                      const EvolutionOptions& opt) {
    if (states.empty()) throw UsageError("evolve_ensemble needs at least one state");
    if (!(opt.T_final > 0.0)) throw ConfigError("numerics.T_final must be positive");
    if (opt.sample_every == 0 || opt.window < 2) throw ConfigError("sample cadence must be positive and window >= 2");
    for (const auto& s : states) {
        if (!(s.grid() == disc.grid())) throw UsageError("initial datum lives on a different grid");
        for (double v : s.values())
            if (!std::isfinite(v)) throw ConfigError("initial datum has a non-finite value");
    }
    const std::size_t m = states.size();
    EnsembleResult res;
    res.traces.assign(m, EvolutionTrace{});
    for (auto& tr : res.traces) tr.window = opt.window;

    auto record = [&](std::size_t k, double t, const GridFunction& u, double lip_time, double resid) {
        const auto mt = metrics(u);
        TraceRecord r{t, mt.osc, mt.sup_norm, mt.lipschitz, lip_time, 0.0, resid, u.mean()};
        auto& tr = res.traces[k];
        tr.records.push_back(r);
        tr.records.back().running_slope = detail::trailing_slope(tr.records, opt.window);
        if (opt.store_states) tr.states.push_back(u);
    };
    for (std::size_t k = 0; k < m; ++k) record(k, 0.0, states[k], 0.0, 0.0);

    double t = 0.0;
    std::size_t n = 0;
    std::size_t quiet_samples = 0;
    std::vector<UpwindGradients> grads;
    grads.reserve(m);
    std::vector<double> lip_time(m, 0.0), resid(m, 0.0);
    while (t < opt.T_final) {
        grads.clear();
        double bound = 0.0;
        for (const auto& s : states) {
            grads.push_back(upwind_gradients(s));
            bound = std::max(bound, gradient_bound(grads.back()));
        }
        // theta is checked against the current gradients every step (raised
        // when exceeded) and refreshed with margin on the regular cadence
        if (bound > disc.covered_gradient() || n % opt.theta_refresh == 0)
            disc.cover(std::max(opt.min_cover, opt.gradient_margin * bound));
        double dt = disc.dt();
        bool last = false;
        if (t + dt >= opt.T_final) {
            dt = opt.T_final - t;
            last = true;
        }
        for (std::size_t k = 0; k < m; ++k) {
            const GridFunction r = disc.rhs(states[k], grads[k]);
            double dmax = 0.0, dmean = 0.0;
            std::vector<double> next(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) {
                const double du = dt * r[i];
                next[i] = states[k][i] + du;
                if (!std::isfinite(next[i])) throw BlowUpError("non-finite value in the evolved state", n);
                dmax = std::max(dmax, std::abs(du));
                dmean += du;
            }
            dmean /= static_cast<double>(r.size());
            double dev = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) dev = std::max(dev, std::abs(dt * r[i] - dmean));
            lip_time[k] = dt > 0.0 ? dmax / dt : 0.0;
            resid[k] = dev;
            states[k] = GridFunction(disc.grid(), std::move(next));
        }
        ++n;
        t = last ? opt.T_final : t + dt;
        if (opt.on_step) opt.on_step(t, states);
        if (n % opt.sample_every == 0 || last) {
            bool all_quiet = true;
            for (std::size_t k = 0; k < m; ++k) {
                record(k, t, states[k], lip_time[k], resid[k]);
                if (!(resid[k] < opt.stationarity_tol)) all_quiet = false;
            }
            quiet_samples = all_quiet ? quiet_samples + 1 : 0;
            if (opt.early_stop && quiet_samples >= opt.stationarity_count && !last) {
                for (auto& tr : res.traces) tr.status = EvolutionStatus::converged_modulo_constant;
                break;
            }
        }
    }
    for (auto& tr : res.traces) {
        tr.steps = n;
        tr.theta_sup = disc.theta_sup();
        tr.final_dt = disc.dt();
    }
    res.finals = std::move(states);
    return res;
}

inline std::pair<GridFunction, EvolutionTrace> evolve(Discretization& disc, const GridFunction& u0,
                                                      const EvolutionOptions& opt) {
    auto r = evolve_ensemble(disc, {u0}, opt);
    return {std::move(r.finals[0]), std::move(r.traces[0])};
}

// Least-squares slope of mean(u) over the trailing window of the trace.
inline SlopeEstimate estimate_slope(const EvolutionTrace& trace) {
    if (trace.records.size() < 2 * trace.window)
        throw UsageError("estimate_slope needs at least " + std::to_string(2 * trace.window) + " samples, got " +
                         std::to_string(trace.records.size()));
    std::vector<double> t, y;
    for (std::size_t i = trace.records.size() - trace.window; i < trace.records.size(); ++i) {
        t.push_back(trace.records[i].t);
        y.push_back(trace.records[i].mean);
    }
    return detail::least_squares(t, y);
}

struct KappaSeries {
    std::vector<double> t;
    std::vector<double> kappa;  // max over the grid of (u - v)
    double max_increase = 0.0;  // max_k kappa(t_{k+1}) - kappa(t_k), clipped at 0
    bool violated = false;
};

// kappa(t_k) = max (u - v)(t_k) from two traces recorded with stored states.
inline KappaSeries kappa_series(const EvolutionTrace& u, const EvolutionTrace& v) {
    if (u.states.size() != v.states.size() || u.states.size() != u.records.size())
        throw UsageError("kappa_series needs two traces with stored states at the same samples");
    KappaSeries ks;
    for (std::size_t k = 0; k < u.states.size(); ++k) {
        if (u.records[k].t != v.records[k].t) throw UsageError("kappa_series: sample times differ");
        GridFunction::check_same_grid(u.states[k], v.states[k]);
        double m = -kInf;
        for (std::size_t i = 0; i < u.states[k].size(); ++i) m = std::max(m, u.states[k][i] - v.states[k][i]);
        ks.t.push_back(u.records[k].t);
        ks.kappa.push_back(m);
        if (k > 0) ks.max_increase = std::max(ks.max_increase, m - ks.kappa[k - 1]);
    }
    ks.violated = ks.max_increase > 1e-10;
    return ks;
}

}  // namespace nlhj
