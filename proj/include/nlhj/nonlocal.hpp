#pragma once

// Quadrature for the Levy-Ito operator
//
//   I^j(u, x) = int [u(x + j(x,z)) - u(x) - 1_B(z) <Du(x), j(x,z)>] nu(dz)
//
// and its exponential counterpart
//
//   J^j(v, x) = int [e^{v(x + j(x,z)) - v(x)} - 1 - 1_B(z) <Dv(x), j(x,z)>] nu(dz).
//
// The measure is split at the cutoff delta = h:
//   |z| < delta      lumped into kappa_small(x) * (second difference),
//   delta <= |z| <= 1 radial cells with exact mass, compensated,
//   1 < |z| <= R_max  radial cells with exact mass, plain,
//   |z| > R_max      dropped or periodized (see TailTreatment).
// Arrival points x + j are split onto the neighboring grid nodes with linear
// (bilinear) weights, and all arrivals landing on the same grid offset are
// aggregated into one nonnegative weight. The exponential operator uses the
// same split arrivals, so I_h(e^v) = e^v J_h(v) holds algebraically.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <ostream>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/sinc.hpp>
#include <fftw3.h>

#include "nlhj/errors.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/model.hpp"

namespace nlhj {

struct QuadratureNode {
    Point z{0.0, 0.0};
    double weight = 0.0;
    bool compensated = false;
};

class QuadratureTable {
public:
    const TorusGrid& grid() const noexcept { return grid_; }
    double delta() const noexcept { return delta_; }
    double tail_radius() const noexcept { return tail_radius_; }
    int nodes_per_decade() const noexcept { return nodes_per_decade_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    const std::vector<QuadratureNode>& nodes() const noexcept { return nodes_; }
    bool shared_row() const noexcept { return shared_; }

    // Aggregated arrival weights of grid point i, indexed by grid offset.
    std::span<const double> row(std::size_t i) const noexcept {
        const std::size_t r = shared_ ? 0 : i;
        return {rows_.data() + r * grid_.size(), grid_.size()};
    }
    double row_mass(std::size_t i) const noexcept { return row_mass_[shared_ ? 0 : i]; }
    double max_row_mass() const noexcept { return *std::max_element(row_mass_.begin(), row_mass_.end()); }

    // Sum of compensated w_q j(x_i, z_q).
    const Point& drift(std::size_t i) const noexcept { return drift_[i]; }
    double kappa_small(std::size_t i) const noexcept { return kappa_[i]; }
    double kappa_min() const noexcept { return *std::min_element(kappa_.begin(), kappa_.end()); }
    double kappa_max() const noexcept { return *std::max_element(kappa_.begin(), kappa_.end()); }

    // nu-mass beyond the tail radius, and how it enters the operator.
    double tail_mass() const noexcept { return tail_mass_; }
    TailTreatment tail() const noexcept { return tail_; }
    double applied_tail_mass() const noexcept { return tail_ == TailTreatment::periodized ? tail_mass_ : 0.0; }

    // Total weight of all jumps resolved on the grid at point i (rows + periodized tail).
    double total_mass(std::size_t i) const noexcept { return row_mass(i) + applied_tail_mass(); }

    // Grid offset index -> arrival grid index for base point i.
    std::size_t arrival(std::size_t i, std::size_t offset) const noexcept {
        if (grid_.dim() == 1) return (i + offset) % grid_.size();
        const int o0 = grid_.coord(offset, 0), o1 = grid_.coord(offset, 1);
        return grid_.index(grid_.coord(i, 0) + o0, grid_.coord(i, 1) + o1);
    }

    void write_stats_csv(std::ostream& os) const {
        os << "node_count,tail_mass,tail_treatment,kappa_min,kappa_max,max_row_mass,delta,tail_radius,"
              "nodes_per_decade\n";
        os << nodes_.size() << ',' << format_real(tail_mass_) << ','
           << (tail_ == TailTreatment::periodized ? "periodized" : "drop") << ',' << format_real(kappa_min())
           << ',' << format_real(kappa_max()) << ',' << format_real(max_row_mass()) << ','
           << format_real(delta_) << ',' << format_real(tail_radius_) << ',' << nodes_per_decade_ << '\n';
    }

private:
    friend QuadratureTable build_table(const ProblemSpec&, const TorusGrid&, int);

    TorusGrid grid_;
    double delta_ = 0.0;
    double tail_radius_ = 0.0;
    int nodes_per_decade_ = 16;
    std::vector<QuadratureNode> nodes_;
    bool shared_ = true;
    std::vector<double> rows_;
    std::vector<double> row_mass_;
    std::vector<Point> drift_;
    std::vector<double> kappa_;
    double tail_mass_ = 0.0;
    TailTreatment tail_ = TailTreatment::periodized;
};

namespace detail {

// Radial cell boundaries: geometric with q per decade on [lo, hi], 1 inserted
// as a break, and every cell wider than max_width split uniformly.
inline std::vector<double> radial_breaks(double lo, double hi, int per_decade, double max_width) {
    std::vector<double> geo;
    const int cells = std::max(1, static_cast<int>(std::ceil(per_decade * std::log10(hi / lo) - 1e-12)));
    for (int i = 0; i <= cells; ++i) geo.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / cells));
    geo.back() = hi;
    if (lo < 1.0 && hi > 1.0) geo.push_back(1.0);
    std::sort(geo.begin(), geo.end());
    geo.erase(std::unique(geo.begin(), geo.end(), [](double a, double b) { return std::abs(a - b) < 1e-14 * b; }),
              geo.end());
    std::vector<double> out{geo.front()};
    for (std::size_t i = 1; i < geo.size(); ++i) {
        const double a = geo[i - 1], b = geo[i];
        const int parts = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-9)));
        for (int k = 1; k < parts; ++k) out.push_back(a + (b - a) * k / parts);
        out.push_back(b);
    }
    return out;
}

inline std::vector<QuadratureNode> radial_nodes(const LevyData& l, int dim, double delta, double h,
                                                int per_decade) {
    std::vector<QuadratureNode> nodes;
    double hi = l.tail_radius;
    if (l.family == LevyData::Family::finite) hi = std::min(hi, l.finite_radius);
    if (!(hi > delta)) return nodes;
    const auto breaks = radial_breaks(delta, hi, per_decade, h);
    for (std::size_t c = 1; c < breaks.size(); ++c) {
        const double a = breaks[c - 1], b = breaks[c];
        const double mass = l.mass_between(a, b, dim);
        if (!(mass > 0.0)) continue;
        const double mid = 0.5 * (a + b);
        const bool comp = b <= 1.0 + 1e-14;
        if (dim == 1) {
            nodes.push_back({Point{mid, 0.0}, 0.5 * mass, comp});
            nodes.push_back({Point{-mid, 0.0}, 0.5 * mass, comp});
        } else {
            // angular sectors no wider than h at the cell midpoint, even count
            int sectors = static_cast<int>(std::ceil(kTwoPi * mid / h));
            sectors = std::clamp(sectors + (sectors % 2), 16, 4096);
            for (int s = 0; s < sectors / 2; ++s) {
                const double t = kTwoPi * (s + 0.5) / sectors;
                const Point z{mid * std::cos(t), mid * std::sin(t)};
                nodes.push_back({z, mass / sectors, comp});
                nodes.push_back({Point{-z[0], -z[1]}, mass / sectors, comp});
            }
        }
    }
    return nodes;
}

// Adds weight w at displacement j (in torus units) to a dense offset row,
// splitting it linearly onto the surrounding grid nodes.
inline void deposit(const TorusGrid& g, std::span<double> row, const Point& j, double w) {
    const int n = g.n();
    if (g.dim() == 1) {
        const double s = j[0] * n;
        const double fl = std::floor(s);
        const double t = s - fl;
        const long k = static_cast<long>(fl);
        const auto wrap = [n](long v) { return static_cast<std::size_t>(((v % n) + n) % n); };
        row[wrap(k)] += w * (1.0 - t);
        if (t > 0.0) row[wrap(k + 1)] += w * t;
        return;
    }
    const double s0 = j[0] * n, s1 = j[1] * n;
    const double f0 = std::floor(s0), f1 = std::floor(s1);
    const double t0 = s0 - f0, t1 = s1 - f1;
    const long k0 = static_cast<long>(f0), k1 = static_cast<long>(f1);
    const auto wrap = [n](long v) { return static_cast<int>(((v % n) + n) % n); };
    const double w00 = (1.0 - t0) * (1.0 - t1), w10 = t0 * (1.0 - t1), w01 = (1.0 - t0) * t1, w11 = t0 * t1;
    row[g.index(wrap(k0), wrap(k1))] += w * w00;
    if (w10 > 0.0) row[g.index(wrap(k0 + 1), wrap(k1))] += w * w10;
    if (w01 > 0.0) row[g.index(wrap(k0), wrap(k1 + 1))] += w * w01;
    if (w11 > 0.0) row[g.index(wrap(k0 + 1), wrap(k1 + 1))] += w * w11;
}

}  // namespace detail

// Builds the quadrature stencil for `spec.levy` on `grid` with
// `nodes_per_decade` geometric radial cells per decade.
inline QuadratureTable build_table(const ProblemSpec& spec, const TorusGrid& grid, int nodes_per_decade = 16) {
    const LevyData& l = spec.levy;
    const int d = grid.dim();
    if (d != spec.dim) throw UsageError("grid dimension differs from the problem dimension");
    if (!(l.tail_radius >= 1.0)) throw ConfigError("levy.tail_radius must be >= 1");
    if (l.family == LevyData::Family::fractional && !(l.order > 0.0 && l.order < 2.0))
        throw ConfigError("levy.order must lie in (0,2)");
    if (l.family == LevyData::Family::finite && !(l.finite_mass >= 0.0))
        throw ConfigError("levy finite measure has negative density");
    for (const Atom& at : l.atoms)
        if (!(at.mass >= 0.0)) throw ConfigError("levy atom has negative mass");
    if (nodes_per_decade < 1) throw ConfigError("nodes_per_decade must be >= 1");

    QuadratureTable t;
    t.grid_ = grid;
    t.delta_ = grid.h();
    t.tail_radius_ = l.tail_radius;
    t.nodes_per_decade_ = nodes_per_decade;
    t.tail_ = l.tail;

    double kappa_base = 0.0;
    if (l.radial()) {
        t.nodes_ = detail::radial_nodes(l, d, t.delta_, grid.h(), nodes_per_decade);
        kappa_base = 0.5 * l.radial_moment(2.0, 0.0, t.delta_, d);
        t.tail_mass_ = l.tail_mass(d);
    } else if (l.family == LevyData::Family::atomic) {
        for (const Atom& at : l.atoms)
            if (at.mass > 0.0) t.nodes_.push_back({at.z, at.mass, norm(at.z, d) < 1.0});
    }

    const std::size_t n = grid.size();
    t.shared_ = l.translation_invariant();
    const std::size_t rows = t.shared_ ? 1 : n;
    t.rows_.assign(rows * n, 0.0);
    t.row_mass_.assign(rows, 0.0);
    t.drift_.assign(n, Point{0.0, 0.0});
    t.kappa_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = grid.point(i);
        const double s = l.jump_factor(x, d);
        t.kappa_[i] = s * s * kappa_base;
        Point b{0.0, 0.0};
        const bool fill = !t.shared_ || i == 0;
        std::span<double> row(t.rows_.data() + (t.shared_ ? 0 : i) * n, n);
        for (const QuadratureNode& q : t.nodes_) {
            const Point j = l.jump_at(x, q.z, d);
            if (fill) detail::deposit(grid, row, j, q.weight);
            if (q.compensated) {
                b[0] += q.weight * j[0];
                b[1] += q.weight * j[1];
            }
        }
        t.drift_[i] = b;
        if (fill) {
            double m = 0.0;
            for (double w : row) m += w;
            t.row_mass_[t.shared_ ? 0 : i] = m;
        }
    }
    return t;
}

namespace detail {

inline void check_table(const QuadratureTable& table, const GridFunction& u) {
    if (!(table.grid() == u.grid())) throw UsageError("quadrature table was built on a different grid");
}

// Anchored mean: mean(u - min u), invariant under permutations of u.
inline std::pair<double, double> anchored_mean(std::span<const double> u) {
    std::vector<double> s(u.begin(), u.end());
    std::sort(s.begin(), s.end());
    const double lo = s.front();
    double acc = 0.0;
    for (double v : s) acc += v - lo;
    return {lo, acc / static_cast<double>(s.size())};
}

template <class Increment>
GridFunction apply_stencil(const QuadratureTable& table, const GridFunction& u, const GridVectorField& grad,
                           Increment&& inc) {
    const TorusGrid& g = u.grid();
    const std::size_t n = g.size();
    const int d = g.dim();
    const double inv_h2 = static_cast<double>(g.n()) * g.n();
    std::vector<double> out(n, 0.0);
    std::vector<double> ext;
    if (d == 1) {
        ext.resize(2 * n);
        for (std::size_t i = 0; i < 2 * n; ++i) ext[i] = u[i % n];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u[i];
        double small = 0.0;
        for (int k = 0; k < d; ++k)
            small += inc(u[g.shift(i, k, 1)], ui) + inc(u[g.shift(i, k, -1)], ui);
        double acc = table.kappa_small(i) / d * inv_h2 * small;
        const auto row = table.row(i);
        double jumps = 0.0;
        if (d == 1) {
            const double* base = ext.data() + i;
            const double* w = row.data();
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            std::size_t o = 0;
            for (; o + 4 <= n; o += 4) {
                a0 += w[o] * inc(base[o], ui);
                a1 += w[o + 1] * inc(base[o + 1], ui);
                a2 += w[o + 2] * inc(base[o + 2], ui);
                a3 += w[o + 3] * inc(base[o + 3], ui);
            }
            for (; o < n; ++o) a0 += w[o] * inc(base[o], ui);
            jumps = (a0 + a1) + (a2 + a3);
        } else {
            for (std::size_t o = 0; o < n; ++o)
                if (row[o] != 0.0) jumps += row[o] * inc(u[table.arrival(i, o)], ui);
        }
        acc += jumps;
        const Point& b = table.drift(i);
        for (int k = 0; k < d; ++k) acc -= grad.axis[k][i] * b[k];
        out[i] = acc;
    }
    return GridFunction(g, std::move(out));
}

}  // namespace detail

// Discrete I^j applied to u; `grad` supplies the compensator gradient
// (normally centered_gradient(u)).
inline GridFunction apply_Ij(const QuadratureTable& table, const GridFunction& u, const GridVectorField& grad) {
    detail::check_table(table, u);
    GridFunction out =
        detail::apply_stencil(table, u, grad, [](double target, double center) { return target - center; });
    if (table.applied_tail_mass() > 0.0) {
        const auto [lo, mean_shift] = detail::anchored_mean(u.values());
        const double m = table.applied_tail_mass();
        for (std::size_t i = 0; i < u.size(); ++i) out[i] += m * (mean_shift + (lo - u[i]));
    }
    return out;
}

inline GridFunction apply_Ij(const QuadratureTable& table, const GridFunction& u) {
    return apply_Ij(table, u, centered_gradient(u));
}

// Discrete J^j applied to v: every increment u(y) - u(x) of apply_Ij becomes
// e^{v(y) - v(x)} - 1; the compensator subtracts <grad, j>.
inline GridFunction apply_Jj(const QuadratureTable& table, const GridFunction& v, const GridVectorField& grad) {
    detail::check_table(table, v);
    const double osc = v.max() - v.min();
    if (osc > 700.0) throw DomainError("apply_Jj: osc(v) = " + std::to_string(osc) + " overflows exp");
    GridFunction out = detail::apply_stencil(table, v, grad,
                                             [](double target, double center) { return std::expm1(target - center); });
    if (table.applied_tail_mass() > 0.0) {
        const double lo = v.min();
        double s = 0.0;
        for (double x : v.values()) s += std::exp(x - lo);
        const double mean_exp = s / static_cast<double>(v.size());
        const double m = table.applied_tail_mass();
        for (std::size_t i = 0; i < v.size(); ++i) out[i] += m * (std::exp(lo - v[i]) * mean_exp - 1.0);
    }
    return out;
}

inline GridFunction apply_Jj(const QuadratureTable& table, const GridFunction& v) {
    return apply_Jj(table, v, centered_gradient(v));
}

// The |z| < delta part alone: kappa_small times the second difference of u
// (or its exponential form when `exponential` is set).
inline GridFunction apply_small_jumps(const QuadratureTable& table, const GridFunction& u, bool exponential) {
    detail::check_table(table, u);
    const TorusGrid& g = u.grid();
    const int d = g.dim();
    const double inv_h2 = static_cast<double>(g.n()) * g.n();
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k)
            for (int step : {1, -1}) {
                const double diff = u[g.shift(i, k, step)] - u[i];
                s += exponential ? std::expm1(diff) : diff;
            }
        out[i] = table.kappa_small(i) / d * inv_h2 * s;
    }
    return GridFunction(g, std::move(out));
}

// Symbol of the fractional operator on the unit torus:
//   Phi(k) = int_R (1 - cos(2 pi k z)) |z|^{-1-order} dz = |k|^order Phi(1).
// Phi(1) is computed by adaptive quadrature: tanh-sinh on [0,1] and the tail
// split into its mass 1/order and an oscillatory part handled by a Fourier
// quadrature.
inline double fractional_symbol_unit(double order) {
    if (!(order > 0.0 && order < 2.0)) throw ConfigError("fractional order must lie in (0,2)");
    const double pi = std::numbers::pi;
    // the abscissa near z = 0 is recovered from its distance to the endpoint
    auto integrand = [&](double z, double zc) {
        const double zz = (z < 0.5) ? -zc : z;
        const double sinc = boost::math::sinc_pi(pi * zz);
        return 2.0 * pi * pi * sinc * sinc * std::pow(zz, 1.0 - order);
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double inner = ts.integrate(integrand, 0.0, 1.0, 1e-13);
    // int_1^inf cos(w z) z^{-1-order} dz = cos w * C - sin w * S with
    // C, S the cosine / sine transforms of (t + 1)^{-1-order} on [0, inf).
    const double w = kTwoPi;
    auto shifted = [&](double t) { return std::pow(t + 1.0, -1.0 - order); };
    boost::math::quadrature::ooura_fourier_cos<double> fc(1e-12);
    boost::math::quadrature::ooura_fourier_sin<double> fs(1e-12);
    const double C = fc.integrate(shifted, w).first;
    const double S = fs.integrate(shifted, w).first;
    const double tail = 1.0 / order - (std::cos(w) * C - std::sin(w) * S);
    return 2.0 * (inner + tail);
}

inline double fractional_symbol(int k, double order) {
    if (k == 0) return 0.0;
    return std::pow(std::abs(static_cast<double>(k)), order) * fractional_symbol_unit(order);
}

// Exact periodic fractional operator -Phi(k) applied through the DFT. Only
// meaningful for d = 1 and the translation jump j(x,z) = z.
inline GridFunction fractional_reference(const GridFunction& u, double order) {
    const TorusGrid& g = u.grid();
    if (g.dim() != 1) throw UsageError("fractional_reference is implemented for d = 1");
    if (!(order > 0.0 && order < 2.0)) throw ConfigError("fractional order must lie in (0,2)");
    const int n = g.n();
    const int nc = n / 2 + 1;
    std::vector<double> in(u.values().begin(), u.values().end());
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(nc));
    fftw_plan fwd = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
    const double unit = fractional_symbol_unit(order);
    for (int k = 0; k < nc; ++k) spec[static_cast<std::size_t>(k)] *= -unit * std::pow(double(k), order) / n;
    std::vector<double> out(static_cast<std::size_t>(n));
    fftw_plan bwd = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec.data()), out.data(), FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);
    return GridFunction(g, std::move(out));
}

inline GridFunction fractional_reference(const GridFunction& u, const LevyData& levy) {
    if (levy.family != LevyData::Family::fractional)
        throw UsageError("fractional_reference needs the fractional Levy family");
    if (!levy.translation_invariant())
        throw UsageError("fractional_reference is undefined for an x-dependent jump function");
    return fractional_reference(u, levy.order);
}

}  // namespace nlhj
