#pragma once

// Monotone discretization of the local terms: the degenerate diffusion
// Tr(A(x) D^2 u) and the coercive Hamiltonian H(x, Du) with a Lax-Friedrichs
// flux. `Discretization` bundles these with the nonlocal quadrature table into
// the explicit operator
//
//     rhs(u) = Tr(A D^2 u)_h + I_h u - H_h(x, D+u, D-u) - lambda u
//
// so several states can be advanced with one shared dissipation and time step.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nlhj/errors.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/model.hpp"
#include "nlhj/nonlocal.hpp"

namespace nlhj {

struct SchemeParams {
    double cfl_safety = 0.8;
    double theta_safety = 1.1;
    int nodes_per_decade = 16;
};

// Sparse stencil of the diffusion term: per point, weights on neighbors and
// a (nonpositive) diagonal. d = 1 uses the 3-point stencil scaled by
// a(x) = sigma(x)^2. d = 2 uses, per column c of sigma(x), the directional
// second difference |c|^2 (u(x + k e) - 2u(x) + u(x - k e)) / k^2 with
// e = c/|c|. When c is parallel to a lattice vector with entries in [-2, 2]
// the step k is that vector's length and x +- k e are grid points; otherwise
// k = sqrt(h) and the values at x +- k e are interpolated bilinearly, which
// keeps the interpolation error O(h^2/k^2) = O(h).
class DiffusionStencil {
public:
    struct Entry {
        std::size_t index;
        double weight;
    };

    DiffusionStencil() = default;

    DiffusionStencil(const ProblemSpec& spec, const TorusGrid& grid) : grid_(grid) {
        const std::size_t n = grid.size();
        const int d = grid.dim();
        const double h = grid.h();
        const double inv_h2 = 1.0 / (h * h);
        start_.assign(n + 1, 0);
        diag_.assign(n, 0.0);
        trace_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            start_[i] = entries_.size();
            const Point x = grid.point(i);
            const SigmaMatrix s = spec.diffusion.sigma(x, d);
            if (d == 1) {
                const double a = s.rows() > 0 && s.cols() > 0 ? (s * s.transpose())(0, 0) : 0.0;
                trace_[i] = a;
                if (a > 0.0) {
                    entries_.push_back({grid.shift(i, 0, 1), a * inv_h2});
                    entries_.push_back({grid.shift(i, 0, -1), a * inv_h2});
                    diag_[i] = -2.0 * a * inv_h2;
                }
            } else {
                std::vector<Entry> local;
                double diag = 0.0;
                for (int c = 0; c < s.cols(); ++c) {
                    const double c0 = s(0, c), c1 = s(1, c);
                    const double len2 = c0 * c0 + c1 * c1;
                    if (!(len2 > 0.0)) continue;
                    trace_[i] += len2;
                    const double len = std::sqrt(len2);
                    const Point e{c0 / len, c1 / len};
                    const Point step = lattice_step(e, h);
                    const double k2 = (step[0] * step[0] + step[1] * step[1]) * h * h;
                    const double w = len2 / k2;
                    diag -= 2.0 * w;
                    for (double sgn : {1.0, -1.0})
                        add_bilinear(grid, i, Point{sgn * step[0], sgn * step[1]}, w, local, diag);
                }
                std::sort(local.begin(), local.end(), [](const Entry& a, const Entry& b) { return a.index < b.index; });
                for (const Entry& en : local) {
                    if (!entries_.empty() && entries_.size() > start_[i] && entries_.back().index == en.index)
                        entries_.back().weight += en.weight;
                    else
                        entries_.push_back(en);
                }
                diag_[i] = diag;
            }
        }
        start_[n] = entries_.size();
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    double diagonal(std::size_t i) const noexcept { return diag_[i]; }
    std::span<const Entry> entries(std::size_t i) const noexcept {
        return {entries_.data() + start_[i], start_[i + 1] - start_[i]};
    }
    // sup_x Tr A(x) on the grid.
    double sup_trace() const noexcept { return trace_.empty() ? 0.0 : *std::max_element(trace_.begin(), trace_.end()); }
    bool empty() const noexcept { return entries_.empty(); }

    GridFunction apply(const GridFunction& u) const {
        if (!(u.grid() == grid_)) throw UsageError("diffusion stencil was built on a different grid");
        std::vector<double> out(u.size(), 0.0);
        if (entries_.empty()) return GridFunction(grid_, std::move(out));
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double ui = u[i];
            double acc = 0.0;
            // weights sum to -diag up to the part that lands back on i
            for (const Entry& en : entries(i)) acc += en.weight * (u[en.index] - ui);
            out[i] = acc;
        }
        return GridFunction(grid_, std::move(out));
    }

private:
    // Displacement in grid units used for the unit direction e.
    static Point lattice_step(const Point& e, double h) {
        for (int a = 0; a <= 2; ++a)
            for (int b = -2; b <= 2; ++b) {
                if (a == 0 && b <= 0) continue;
                const double len = std::sqrt(double(a * a + b * b));
                const double cross = e[0] * b - e[1] * a;
                if (std::abs(cross) < 1e-12 * len) {
                    const double sgn = (e[0] * a + e[1] * b) >= 0.0 ? 1.0 : -1.0;
                    return Point{sgn * a, sgn * b};
                }
            }
        const double k = 1.0 / std::sqrt(h);
        return Point{k * e[0], k * e[1]};
    }

    // Splits weight w at x_i + e (e in grid units) bilinearly; the part
    // landing on i itself cancels against the diagonal.
    static void add_bilinear(const TorusGrid& g, std::size_t i, const Point& e, double w, std::vector<Entry>& out,
                             double& diag) {
        const double s0 = e[0], s1 = e[1];
        const double f0 = std::floor(s0), f1 = std::floor(s1);
        const double t0 = s0 - f0, t1 = s1 - f1;
        const int k0 = static_cast<int>(f0), k1 = static_cast<int>(f1);
        const int i0 = g.coord(i, 0), i1 = g.coord(i, 1);
        const double ws[4] = {(1 - t0) * (1 - t1), t0 * (1 - t1), (1 - t0) * t1, t0 * t1};
        const int dx[4] = {0, 1, 0, 1}, dy[4] = {0, 0, 1, 1};
        for (int q = 0; q < 4; ++q) {
            if (ws[q] <= 0.0) continue;
            const std::size_t j = g.index(i0 + k0 + dx[q], i1 + k1 + dy[q]);
            if (j == i)
                diag += w * ws[q];
            else
                out.push_back({j, w * ws[q]});
        }
    }

    TorusGrid grid_;
    std::vector<std::size_t> start_;
    std::vector<Entry> entries_;
    std::vector<double> diag_;
    std::vector<double> trace_;
};

inline GridFunction apply_diffusion(const ProblemSpec& spec, const GridFunction& u) {
    return DiffusionStencil(spec, u.grid()).apply(u);
}

// Lax-Friedrichs numerical Hamiltonian
//   H(x, (D+u + D-u)/2) - sum_k theta(x) (D+u - D-u)_k / 2.
inline GridFunction numerical_hamiltonian(const ProblemSpec& spec, std::span<const double> theta,
                                          const UpwindGradients& grads) {
    const TorusGrid& g = grads.forward.grid;
    const int d = g.dim();
    if (theta.size() != g.size()) throw UsageError("theta must have one value per grid point");
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point p{0.0, 0.0};
        double diss = 0.0;
        for (int k = 0; k < d; ++k) {
            const double fp = grads.forward.axis[k][i], bp = grads.backward.axis[k][i];
            p[k] = 0.5 * (fp + bp);
            diss += 0.5 * (fp - bp);
        }
        out[i] = spec.hamiltonian.value(g.point(i), p, d) - theta[i] * diss;
    }
    return GridFunction(g, std::move(out));
}

inline GridFunction numerical_hamiltonian(const ProblemSpec& spec, double theta, const UpwindGradients& grads) {
    const std::vector<double> t(grads.forward.grid.size(), theta);
    return numerical_hamiltonian(spec, t, grads);
}

// Largest |D+-u| component over the grid.
inline double gradient_bound(const UpwindGradients& grads) {
    double m = 0.0;
    const int d = grads.forward.grid.dim();
    for (int k = 0; k < d; ++k) {
        for (double v : grads.forward.axis[k]) m = std::max(m, std::abs(v));
        for (double v : grads.backward.axis[k]) m = std::max(m, std::abs(v));
    }
    return m;
}

// sup over |p| <= radius of |H_p(x, p)|.
inline double hamiltonian_speed(const Hamiltonian& H, const Point& x, double radius, int dim) {
    if (H.family == Hamiltonian::Family::power_coercive)
        return radius > 0.0 ? std::abs(H.a(x, dim)) * H.m * std::pow(radius, H.m - 1.0) : 0.0;
    double m = 0.0;
    for (double r : log_spaced(std::max(1e-6, 1e-3 * radius), std::max(radius, 1e-6), 24))
        for (const Point& e : detail::directions(dim)) m = std::max(m, norm(H.gradient(x, Point{r * e[0], r * e[1]}, dim), dim));
    return m;
}

// theta_i = safety * (sup_{|p| <= radius} |H_p(x_i, p)| + |b_i|), with b the
// compensator drift, which enters the scheme like a linear Hamiltonian term.
// Every axis gradient component is bounded by `radius`, so |p| <= sqrt(d) radius.
inline std::vector<double> auto_theta(const ProblemSpec& spec, const QuadratureTable& table, double radius,
                                      double safety) {
    const TorusGrid& g = table.grid();
    const int d = g.dim();
    const double r = radius * std::sqrt(static_cast<double>(d));
    std::vector<double> theta(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        theta[i] = safety * (hamiltonian_speed(spec.hamiltonian, g.point(i), r, d) + norm(table.drift(i), d));
    return theta;
}

// Delta t = safety / [2 sup TrA/h^2 + 2 sup kappa/h^2 + jump mass + d sup theta 2/h + lambda];
// the pure ODE case gives safety/lambda, or safety when lambda = 0 too.
inline double stable_timestep(const ProblemSpec& spec, const SchemeParams& params, const QuadratureTable& table,
                              const DiffusionStencil& diffusion, double theta_sup) {
    const TorusGrid& g = table.grid();
    const double h = g.h();
    double mass = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mass = std::max(mass, table.total_mass(i));
    const double denom = 2.0 * diffusion.sup_trace() / (h * h) + 2.0 * table.kappa_max() / (h * h) + mass +
                         g.dim() * theta_sup * 2.0 / h + spec.lambda;
    if (!(denom > 0.0)) return params.cfl_safety;
    return params.cfl_safety / denom;
}

// All operators of the explicit scheme on one grid, with a dissipation that
// only ever increases (so monotonicity claimed for earlier steps still holds).
class Discretization {
public:
    Discretization(ProblemSpec spec, const TorusGrid& grid, SchemeParams params = {})
        : spec_(std::move(spec)),
          grid_(grid),
          params_(params),
          table_(build_table(spec_, grid, params.nodes_per_decade)),
          diffusion_(spec_, grid),
          theta_(grid.size(), 0.0) {
        if (!(params.cfl_safety > 0.0 && params.cfl_safety <= 1.0))
            throw ConfigError("numerics.cfl_safety must lie in (0,1]");
        if (!(params.theta_safety >= 1.0)) throw ConfigError("numerics.theta_safety must be >= 1");
        dt_ = stable_timestep(spec_, params_, table_, diffusion_, 0.0);
    }

    const ProblemSpec& spec() const noexcept { return spec_; }
    const TorusGrid& grid() const noexcept { return grid_; }
    const SchemeParams& params() const noexcept { return params_; }
    const QuadratureTable& table() const noexcept { return table_; }
    const DiffusionStencil& diffusion() const noexcept { return diffusion_; }
    std::span<const double> theta() const noexcept { return theta_; }
    double theta_sup() const noexcept { return *std::max_element(theta_.begin(), theta_.end()); }
    double covered_gradient() const noexcept { return covered_; }
    double dt() const noexcept { return dt_; }
    std::size_t theta_raises() const noexcept { return raises_; }

    // Makes theta cover gradient components up to `radius`. Returns true when
    // theta (and hence dt) changed.
    bool cover(double radius) {
        if (radius <= covered_) return false;
        const auto t = auto_theta(spec_, table_, radius, params_.theta_safety);
        bool changed = false;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] > theta_[i]) {
                theta_[i] = t[i];
                changed = true;
            }
        covered_ = radius;
        if (changed) {
            ++raises_;
            dt_ = stable_timestep(spec_, params_, table_, diffusion_, theta_sup());
        }
        return changed;
    }

    // rhs(u) = diffusion + I_h u - H_h - lambda u, with gradients already computed.
    GridFunction rhs(const GridFunction& u, const UpwindGradients& grads) const {
        GridFunction out = diffusion_.apply(u);
        const GridFunction jumps = apply_Ij(table_, u);
        const GridFunction ham = numerical_hamiltonian(spec_, theta_, grads);
        const double lam = spec_.lambda;
        for (std::size_t i = 0; i < u.size(); ++i) out[i] = out[i] + jumps[i] - ham[i] - lam * u[i];
        return out;
    }

    GridFunction rhs(const GridFunction& u) const { return rhs(u, upwind_gradients(u)); }

private:
    ProblemSpec spec_;
    TorusGrid grid_;
    SchemeParams params_;
    QuadratureTable table_;
    DiffusionStencil diffusion_;
    std::vector<double> theta_;
    double covered_ = 0.0;
    double dt_ = 0.0;
    std::size_t raises_ = 0;
};

}  // namespace nlhj
