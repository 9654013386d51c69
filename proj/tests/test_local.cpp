#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlhj/local.hpp"

namespace nlhj {
namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec make_spec(DiffusionFactor df, LevyData l, double m = 2.0, ScalarField f = ScalarField::cosine(0.0, 1.0),
                      double lambda = 0.0, int dim = 1) {
    ProblemSpec s;
    s.dim = dim;
    s.lambda = lambda;
    s.diffusion = std::move(df);
    s.hamiltonian = Hamiltonian::power_coercive(m, ScalarField::constant(1.0), std::move(f), dim);
    s.levy = std::move(l);
    s.validate();
    return s;
}

ProblemSpec mixed_spec(double lambda = 0.0) {
    return make_spec(DiffusionFactor::sqrt_field(ScalarField::cos_squared(0.1, 0.1)), LevyData::fractional(0.5), 3.0,
                     ScalarField::cosine(0.0, 1.0), lambda);
}

GridFunction random_smooth(const TorusGrid& g, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd;
    double c[3], s[3];
    for (int k = 0; k < 3; ++k) {
        c[k] = scale * nd(rng) / (k + 1);
        s[k] = scale * nd(rng) / (k + 1);
    }
    return GridFunction::sample(g, [&](const Point& x) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double t = 2 * kPi * (k + 1) * (x[0] + 0.5 * x[1]);
            v += c[k] * std::cos(t) + s[k] * std::sin(t);
        }
        return v;
    });
}

TEST(ApplyDiffusion, ConstantGivesZero) {
    const TorusGrid g(1, 64);
    const auto out = apply_diffusion(mixed_spec(), GridFunction(g, 2.0));
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(ApplyDiffusion, UnitCoefficientOnCosine) {
    auto spec = make_spec(DiffusionFactor::constant(1.0), LevyData::none());
    double errs[2];
    int idx = 0;
    for (int n : {256, 512}) {
        const TorusGrid g(1, n);
        const auto u = GridFunction::sample(g, [](const Point& x) { return std::cos(2 * kPi * x[0]); });
        const auto out = apply_diffusion(spec, u);
        double e = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) e = std::max(e, std::abs(out[i] + 4 * kPi * kPi * u[i]));
        errs[idx++] = e / (4 * kPi * kPi);
    }
    EXPECT_LE(errs[0], 1e-3);
    // second order: Richardson ratio 4
    EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.05);
}

TEST(ApplyDiffusion, DegenerateFactorGivesZero) {
    const TorusGrid g(1, 32);
    auto spec = make_spec(DiffusionFactor::none(), LevyData::fractional(1.0));
    const auto out = apply_diffusion(spec, GridFunction::sample(g, [](const Point& x) { return std::sin(6 * x[0]); }));
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(ApplyDiffusion, TwoDimensionalDiagonalAndRotatedFactors) {
    const TorusGrid g(2, 64);
    const auto u = GridFunction::sample(g, [](const Point& x) { return std::cos(2 * kPi * (x[0] + x[1])); });
    // sigma = I: Laplacian = -8 pi^2 u
    const auto lap = apply_diffusion(make_spec(DiffusionFactor::constant(1.0), LevyData::none(), 2.0,
                                               ScalarField::constant(0.0), 0.0, 2),
                                     u);
    for (std::size_t i = 0; i < u.size(); i += 97) EXPECT_NEAR(lap[i], -8 * kPi * kPi * u[i], 0.02 * 8 * kPi * kPi);
    // single column (1,1): Tr(A D^2 u) = u_xx + 2 u_xy + u_yy = -16 pi^2 u, stencil on the grid diagonal
    auto df = DiffusionFactor::from_function(
        [](const Point&) {
            SigmaMatrix s(2, 1);
            s << 1.0, 1.0;
            return s;
        },
        1, 1.0);
    const auto out = apply_diffusion(make_spec(df, LevyData::none(), 2.0, ScalarField::constant(0.0), 0.0, 2), u);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(out[i] + 16 * kPi * kPi * u[i]));
    EXPECT_LT(worst, 0.01 * 16 * kPi * kPi);
    const DiffusionStencil st(make_spec(df, LevyData::none(), 2.0, ScalarField::constant(0.0), 0.0, 2), g);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (const auto& e : st.entries(i)) EXPECT_GE(e.weight, 0.0);
}

TEST(NumericalHamiltonian, ConsistentAtConstantState) {
    auto spec = mixed_spec();
    const TorusGrid g(1, 32);
    const auto grads = upwind_gradients(GridFunction(g, 1.0));
    const auto out = numerical_hamiltonian(spec, 3.0, grads);
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_EQ(out[i], spec.hamiltonian.value(g.point(i), Point{0.0, 0.0}, 1));
}

TEST(NumericalHamiltonian, FirstOrderConsistentOnCosine) {
    auto spec = make_spec(DiffusionFactor::none(), LevyData::none());
    double errs[2];
    int idx = 0;
    for (int n : {128, 256}) {
        const TorusGrid g(1, n);
        const auto u = GridFunction::sample(g, [](const Point& x) { return std::cos(2 * kPi * x[0]); });
        const auto out = numerical_hamiltonian(spec, 15.0, upwind_gradients(u));
        double e = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double x = g.point(i)[0];
            const double p = -2 * kPi * std::sin(2 * kPi * x);
            e = std::max(e, std::abs(out[i] - (p * p - std::cos(2 * kPi * x))));
        }
        errs[idx++] = e;
    }
    EXPECT_NEAR(errs[0] / errs[1], 2.0, 0.1);
}

TEST(AutoTheta, CoversSampledHamiltonianSpeed) {
    auto spec = mixed_spec();
    const TorusGrid g(1, 32);
    const auto table = build_table(spec, g);
    const auto theta = auto_theta(spec, table, 2.0, 1.1);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (int s = 0; s < 50; ++s) {
            const Point p{ud(rng), 0.0};
            EXPECT_GE(theta[i], std::abs(spec.hamiltonian.gradient(g.point(i), p, 1)[0]));
        }
}

TEST(StableTimestep, PureFirstOrder) {
    auto spec = make_spec(DiffusionFactor::none(), LevyData::none());
    const TorusGrid g(1, 128);
    const auto table = build_table(spec, g);
    const DiffusionStencil diff(spec, g);
    EXPECT_DOUBLE_EQ(stable_timestep(spec, SchemeParams{}, table, diff, 2.0), 1.0 / 640.0);
}

TEST(StableTimestep, DiffusionLimited) {
    auto spec = make_spec(DiffusionFactor::constant(1.0), LevyData::none());
    const TorusGrid g(1, 128);
    const double h = g.h();
    const double dt = stable_timestep(spec, SchemeParams{}, build_table(spec, g), DiffusionStencil(spec, g), 0.0);
    EXPECT_DOUBLE_EQ(dt, 0.8 * h * h / 2.0);
}

TEST(StableTimestep, OdeBranch) {
    auto spec = make_spec(DiffusionFactor::none(), LevyData::none(), 2.0, ScalarField::constant(0.0), 1.0);
    const TorusGrid g(1, 16);
    EXPECT_DOUBLE_EQ(stable_timestep(spec, SchemeParams{}, build_table(spec, g), DiffusionStencil(spec, g), 0.0), 0.8);
    auto zero = make_spec(DiffusionFactor::none(), LevyData::none(), 2.0, ScalarField::constant(0.0), 0.0);
    EXPECT_DOUBLE_EQ(stable_timestep(zero, SchemeParams{}, build_table(zero, g), DiffusionStencil(zero, g), 0.0), 0.8);
}

// Explicit update u + dt rhs(u) with the discretization's current theta.
GridFunction update(const Discretization& d, const GridFunction& u) {
    const auto r = d.rhs(u);
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] + d.dt() * r[i];
    return GridFunction(u.grid(), v);
}

TEST(ExplicitUpdate, NeighborIncreaseNeverDecreasesCenter) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ud(0.0, 0.3);
    for (auto spec : {mixed_spec(), mixed_spec(0.5),
                      make_spec(DiffusionFactor::none(), LevyData::atomic({Atom{Point{0.3, 0.0}, 2.0}}))}) {
        const TorusGrid g(1, 64);
        Discretization d(spec, g);
        for (int trial = 0; trial < 10; ++trial) {
            const auto u = random_smooth(g, rng, 0.1);
            d.cover(1.25 * gradient_bound(upwind_gradients(u)) + 1.0);
            const auto base = update(d, u);
            for (std::size_t j : {std::size_t(3), std::size_t(17), std::size_t(40)}) {
                auto w = u;
                w[j] += ud(rng);
                if (gradient_bound(upwind_gradients(w)) > d.covered_gradient()) continue;
                const auto up = update(d, w);
                for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GE(up[i], base[i] - 1e-12) << i << " " << j;
            }
        }
    }
}

TEST(ExplicitUpdate, PreservesOrderedPairs) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ud(0.0, 0.2);
    const TorusGrid g(1, 64);
    Discretization d(mixed_spec(), g);
    d.cover(5.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto u = random_smooth(g, rng, 0.1);
        auto w = u;
        for (std::size_t i = 0; i < g.size(); ++i) w[i] += ud(rng) * (i % 3 == 0);
        if (gradient_bound(upwind_gradients(w)) > 5.0) continue;
        const auto a = update(d, u), b = update(d, w);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(a[i], b[i] + 1e-12);
    }
}

TEST(ExplicitUpdate, ConstantShiftPassesThroughExactly) {
    // dyadic values keep every difference exact, so spatial terms are unchanged bit for bit
    const TorusGrid g(1, 64);
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> dist(-(1 << 10), 1 << 10);
    std::vector<double> v(g.size());
    for (double& x : v) x = std::ldexp(static_cast<double>(dist(rng)), -14);
    const GridFunction u(g, v);
    Discretization d0(mixed_spec(0.0), g);
    d0.cover(2.0);
    const auto ra = d0.rhs(u), rb = d0.rhs(u + 0.75);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(ra[i], rb[i]);
    const auto a = update(d0, u), b = update(d0, u + 0.75);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(b[i], a[i] + 0.75, 1e-15);
    Discretization d1(mixed_spec(0.25), g);
    d1.cover(2.0);
    const auto r0 = d1.rhs(u), r1 = d1.rhs(u + 0.75);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(r1[i], r0[i] - 0.25 * 0.75);
    const auto c = update(d1, u), e = update(d1, u + 0.75);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(e[i], c[i] + 0.75 * (1 - 0.25 * d1.dt()), 1e-15);
}

TEST(Discretization, ThetaRatchetsUpOnly) {
    const TorusGrid g(1, 32);
    Discretization d(mixed_spec(), g);
    EXPECT_TRUE(d.cover(2.0));
    const double t2 = d.theta_sup(), dt2 = d.dt();
    EXPECT_FALSE(d.cover(1.0));
    EXPECT_EQ(d.theta_sup(), t2);
    EXPECT_TRUE(d.cover(4.0));
    EXPECT_GT(d.theta_sup(), t2);
    EXPECT_LT(d.dt(), dt2);
}

TEST(Discretization, RejectsBadSafety) {
    SchemeParams p;
    p.cfl_safety = 1.5;
    EXPECT_THROW(Discretization(mixed_spec(), TorusGrid(1, 16), p), ConfigError);
}

}  // namespace
}  // namespace nlhj
