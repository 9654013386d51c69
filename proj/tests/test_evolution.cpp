#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nlhj/ergodic.hpp"
#include "nlhj/evolution.hpp"
#include "nlhj/instances.hpp"

namespace nlhj {
namespace {

constexpr double kPi = std::numbers::pi;

GridFunction wave(const TorusGrid& g, double amp, double phase = 0.0, int k = 1) {
    return GridFunction::sample(g, [&](const Point& x) { return amp * std::sin(2 * kPi * k * x[0] + phase); });
}

GridFunction random_smooth(const TorusGrid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    GridFunction u(g, 0.0);
    for (int k = 1; k <= 3; ++k) u = u + wave(g, 0.3 * nd(rng) / k, nd(rng), k);
    return u;
}

EvolutionOptions opts(double T, std::size_t every = 10) {
    EvolutionOptions o;
    o.T_final = T;
    o.sample_every = every;
    o.early_stop = false;
    return o;
}

TEST(Step, ConstantSourceFromZero) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::constant_source(0.7), g, {});
    disc.cover(1.0);
    const double dt = disc.dt();
    const auto u1 = step(disc, GridFunction(g, 0.0), dt);
    for (double v : u1.values()) EXPECT_DOUBLE_EQ(v, dt * 0.7);
}

TEST(Step, StationarySolutionIsFixedPoint) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::eikonal(1.0), g, {});
    StationaryOptions so;
    so.tol = 1e-8;
    const auto st = solve_stationary(disc, GridFunction(g, 0.0), so);
    const auto u1 = step(disc, st.u, disc.dt());
    EXPECT_LE(sup_distance(u1, st.u), 10 * so.tol);
}

TEST(Step, PreservesOrder) {
    const TorusGrid g(1, 128);
    Discretization disc(instances::mixed(), g, {});
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const auto u = random_smooth(g, rng);
        auto w = u;
        std::uniform_real_distribution<double> ud(0.0, 0.05);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += ud(rng);
        disc.cover(std::max({1.0, gradient_bound(upwind_gradients(u)), gradient_bound(upwind_gradients(w))}));
        const auto u1 = step(disc, u, disc.dt());
        const auto w1 = step(disc, w, disc.dt());
        for (std::size_t i = 0; i < u.size(); ++i) EXPECT_LE(u1[i], w1[i]);
    }
}

TEST(Step, OverflowIsBlowUp) {
    const TorusGrid g(1, 32);
    Discretization disc(instances::mixed(), g, {});
    disc.cover(10.0);
    try {
        step(disc, wave(g, 1e10), 1e300, 17);
        FAIL() << "expected BlowUpError";
    } catch (const BlowUpError& e) {
        EXPECT_EQ(e.step(), 17u);
    }
}

TEST(Evolve, RejectsBadInput) {
    const TorusGrid g(1, 32);
    Discretization disc(instances::mixed(), g, {});
    auto u = GridFunction(g, 0.0);
    EXPECT_THROW(evolve(disc, u, opts(0.0)), ConfigError);
    auto bad = u;
    bad[3] = std::nan("");
    EXPECT_THROW(evolve(disc, bad, opts(1.0)), ConfigError);
    const TorusGrid g2(1, 16);
    EXPECT_THROW(evolve(disc, GridFunction(g2, 0.0), opts(1.0)), UsageError);
}

TEST(Evolve, TimesIncreaseAndLandOnFinalTime) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::mixed(), g, {});
    auto [u, tr] = evolve(disc, wave(g, 0.5), opts(0.3, 7));
    ASSERT_GE(tr.records.size(), 2u);
    for (std::size_t k = 1; k < tr.records.size(); ++k) EXPECT_LT(tr.records[k - 1].t, tr.records[k].t);
    EXPECT_EQ(tr.records.back().t, 0.3);
    for (const auto& r : tr.records) {
        EXPECT_TRUE(std::isfinite(r.osc) && std::isfinite(r.lipschitz_time) && std::isfinite(r.running_slope));
    }
    std::ostringstream os;
    tr.write_csv(os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,osc,sup_norm,lip_space,lip_time,slope,residual,mean");
}

TEST(Evolve, ConstantSourceSlopeAndEarlyStop) {
    const TorusGrid g(1, 64);
    const double f0 = 0.37;
    {
        Discretization disc(instances::constant_source(f0), g, {});
        auto [u, tr] = evolve(disc, GridFunction(g, 0.0), opts(2.0, 5));
        EXPECT_NEAR(estimate_slope(tr).slope, f0, 1e-10);
        EXPECT_NEAR(u.mean(), 2.0 * f0, 1e-10);
        EXPECT_EQ(tr.status, EvolutionStatus::completed);
    }
    Discretization disc(instances::constant_source(f0), g, {});
    auto o = opts(100.0, 5);
    o.early_stop = true;
    auto [u, tr] = evolve(disc, GridFunction(g, 0.0), o);
    EXPECT_EQ(tr.status, EvolutionStatus::converged_modulo_constant);
    EXPECT_LT(tr.records.back().t, 1.0);
}

TEST(EstimateSlope, ExactLine) {
    EvolutionTrace tr;
    tr.window = 20;
    for (int k = 0; k < 60; ++k) {
        TraceRecord r;
        r.t = 0.1 * k;
        r.mean = -2.5 * r.t + 4.0;
        tr.records.push_back(r);
    }
    const auto e = estimate_slope(tr);
    EXPECT_NEAR(e.slope, -2.5, 1e-12);
    EXPECT_LE(e.fit_residual, 1e-12);
    tr.records.resize(39);
    EXPECT_THROW(estimate_slope(tr), UsageError);
}

TEST(Evolve, DiscountedSupNormApproachesBound) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::eikonal(1.0), g, {});
    auto [u, tr] = evolve(disc, wave(g, 2.0), opts(15.0, 50));
    const double H0 = instances::eikonal().hamiltonian.H_0;
    EXPECT_LE(tr.records.back().sup_norm, H0 + 1e-5);
    for (const auto& r : tr.records) EXPECT_LE(r.sup_norm, std::max(tr.records.front().sup_norm, H0) + 1e-12);
}

TEST(Evolve, LipschitzBoundedUniformlyInTime) {
    const TorusGrid g(1, 128);
    Discretization disc(instances::eikonal(), g, {});
    auto [u, tr] = evolve(disc, wave(g, 0.5), opts(6.0, 20));
    double first = 0.0, second = 0.0;
    const std::size_t half = tr.records.size() / 2;
    for (std::size_t k = 0; k < tr.records.size(); ++k)
        (k < half ? first : second) = std::max(k < half ? first : second, tr.records[k].lipschitz_space);
    EXPECT_LE(second, 1.05 * first);
}

TEST(Evolve, OscillationHasNoGrowthTrend) {
    const TorusGrid g(1, 128);
    Discretization disc(instances::mixed(), g, {});
    auto [u, tr] = evolve(disc, wave(g, 0.2, 0.4), opts(6.0, 20));
    const std::size_t half = tr.records.size() / 2;
    std::vector<double> t, y;
    for (std::size_t k = half; k < tr.records.size(); ++k) {
        t.push_back(tr.records[k].t);
        y.push_back(tr.records[k].osc);
    }
    EXPECT_LE(detail::least_squares(t, y).slope, 1e-6);
}

TEST(Evolve, TimeLipschitzBoundedByFirstStep) {
    const TorusGrid g(1, 128);
    Discretization disc(instances::mixed(), g, {});
    const auto u0 = wave(g, 0.3, 0.0, 2);
    auto [u, tr] = evolve(disc, u0, opts(3.0, 1));
    const double lambda0 = tr.records[1].lipschitz_time;
    double worst = 0.0;
    for (const auto& r : tr.records) worst = std::max(worst, r.lipschitz_time);
    EXPECT_LE(worst, 1.05 * lambda0);
}

TEST(Evolve, ContractionUndiscountedAndDiscounted) {
    const TorusGrid g(1, 128);
    std::mt19937_64 rng(11);
    for (double lam : {0.0, 1.0}) {
        Discretization disc(instances::mixed(lam), g, {});
        const auto a = random_smooth(g, rng);
        const auto b = random_smooth(g, rng);
        auto o = opts(2.0, 10);
        o.store_states = true;
        auto res = evolve_ensemble(disc, {a, b}, o);
        const double d0 = sup_distance(a, b);
        double prev = d0;
        const auto& ta = res.traces[0];
        for (std::size_t k = 0; k < ta.states.size(); ++k) {
            const double d = sup_distance(ta.states[k], res.traces[1].states[k]);
            EXPECT_LE(d, prev * (1 + 1e-8));
            if (lam > 0) {
                EXPECT_LE(d, std::exp(-lam * ta.records[k].t) * d0 * (1 + 1e-8));
            }
            prev = d;
        }
    }
}

TEST(Evolve, DeterministicAcrossRuns) {
    const TorusGrid g(1, 64);
    std::string out[2];
    for (auto& s : out) {
        Discretization disc(instances::mixed(), g, {});
        auto [u, tr] = evolve(disc, wave(g, 0.4), opts(0.5, 3));
        std::ostringstream os;
        tr.write_csv(os);
        write_csv(os, u);
        s = os.str();
    }
    EXPECT_EQ(out[0], out[1]);
}

EvolutionOptions stored(double T) {
    auto o = opts(T, 10);
    o.store_states = true;
    return o;
}

TEST(KappaSeries, IdenticalRunsGiveZero) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::mixed(), g, {});
    auto r = evolve_ensemble(disc, {wave(g, 0.5), wave(g, 0.5)}, stored(0.5));
    const auto ks = kappa_series(r.traces[0], r.traces[1]);
    for (double k : ks.kappa) EXPECT_EQ(k, 0.0);
    EXPECT_FALSE(ks.violated);
}

TEST(KappaSeries, ConstantShiftPropagates) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::mixed(), g, {});
    const auto v0 = wave(g, 0.5);
    auto r = evolve_ensemble(disc, {v0 + 1.0, v0}, stored(0.5));
    const auto ks = kappa_series(r.traces[0], r.traces[1]);
    for (double k : ks.kappa) EXPECT_NEAR(k, 1.0, 1e-12);
    EXPECT_FALSE(ks.violated);
}

TEST(KappaSeries, BumpIsNonincreasing) {
    const TorusGrid g(1, 128);
    Discretization disc(instances::mixed(), g, {});
    const auto v0 = wave(g, 0.5);
    const auto u0 = v0 + GridFunction::sample(g, [](const Point& x) {
                        return 0.3 * std::exp(-std::pow(torus_distance(x, Point{0.3, 0.0}, 1) / 0.05, 2));
                    });
    auto r = evolve_ensemble(disc, {u0, v0}, stored(1.0));
    const auto ks = kappa_series(r.traces[0], r.traces[1]);
    EXPECT_FALSE(ks.violated) << ks.max_increase;
    EXPECT_LT(ks.kappa.back(), ks.kappa.front());
}

TEST(KappaSeries, MismatchedTracesAreUsageErrors) {
    const TorusGrid g(1, 64);
    Discretization disc(instances::mixed(), g, {});
    auto a = evolve(disc, wave(g, 0.5), stored(0.2)).second;
    auto b = evolve(disc, wave(g, 0.5), opts(0.2, 10)).second;
    EXPECT_THROW(kappa_series(a, b), UsageError);
}

}  // namespace
}  // namespace nlhj
