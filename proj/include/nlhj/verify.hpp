#pragma once

// Runnable verdicts: jump reachability and the covering condition for the
// strong maximum principle, discrete comparison, the exponential change of
// variables u = e^v, and the discounted sup bound.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlhj/ergodic.hpp"
#include "nlhj/errors.hpp"
#include "nlhj/evolution.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/local.hpp"
#include "nlhj/model.hpp"
#include "nlhj/nonlocal.hpp"

namespace nlhj {

// One machine-readable verdict row.
struct Verdict {
    std::string name;
    std::string instance;
    bool passed = false;
    std::string witness;
    double max_defect = 0.0;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string grid_point_label(const TorusGrid& g, std::size_t i) {
    return fmt_point(g.point(i), g.dim());
}

}  // namespace detail

inline void write_verdicts_csv(std::ostream& os, const std::vector<Verdict>& vs) {
    os << "name,instance,passed,witness,max_defect\n";
    for (const auto& v : vs)
        os << detail::csv_field(v.name) << ',' << detail::csv_field(v.instance) << ',' << (v.passed ? "pass" : "fail")
           << ',' << detail::csv_field(v.witness) << ',' << format_real(v.max_defect) << '\n';
}

// ---------------------------------------------------------------------------
// Reachability of jumps
// ---------------------------------------------------------------------------

using GridMask = std::vector<std::uint8_t>;

struct ReachableSet {
    std::size_t base = 0;
    std::vector<GridMask> masks;  // X_0, X_1, ...; each contains the previous one
    GridMask closure;             // the last mask: the fixpoint when `fixpoint` is set
    bool fixpoint = false;

    static std::size_t count(const GridMask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)); }
};

// Cells charged by the jump measure from one base point. Atoms are snapped to
// the nearest cell; densities use the quadrature rows with a relative mass
// threshold, plus the nearest neighbours carrying the small jumps.
class JumpSupport {
public:
    JumpSupport(const ProblemSpec& spec, const TorusGrid& grid, double threshold = 1e-14)
        : spec_(spec), grid_(grid), threshold_(threshold) {
        if (spec.levy.radial()) table_.emplace(build_table(spec, grid));
        cache_.resize(grid.size());
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    bool translation_invariant() const noexcept { return spec_.levy.translation_invariant(); }

    const std::vector<std::size_t>& cells(std::size_t i) {
        auto& c = cache_[i];
        if (!c) c = compute(i);
        return *c;
    }

private:
    std::vector<std::size_t> compute(std::size_t i) const {
        std::vector<std::size_t> out;
        const int d = grid_.dim();
        const LevyData& l = spec_.levy;
        if (l.family == LevyData::Family::atomic) {
            const Point x = grid_.point(i);
            const double n = static_cast<double>(grid_.n());
            for (const Atom& at : l.atoms) {
                if (!(at.mass > 0.0)) continue;
                const Point j = l.jump_at(x, at.z, d);
                const int c0 = static_cast<int>(std::lround((x[0] + j[0]) * n));
                const int c1 = d == 2 ? static_cast<int>(std::lround((x[1] + j[1]) * n)) : 0;
                out.push_back(d == 1 ? static_cast<std::size_t>(((c0 % grid_.n()) + grid_.n()) % grid_.n())
                                     : grid_.index(c0, c1));
            }
        } else if (table_) {
            const auto row = table_->row(i);
            const double cut = threshold_ * table_->max_row_mass();
            for (std::size_t o = 0; o < row.size(); ++o)
                if (row[o] > cut) out.push_back(table_->arrival(i, o));
            if (table_->kappa_small(i) > 0.0)
                for (int k = 0; k < d; ++k) {
                    out.push_back(grid_.shift(i, k, 1));
                    out.push_back(grid_.shift(i, k, -1));
                }
            if (table_->applied_tail_mass() > 0.0 && l.jump_factor(grid_.point(i), d) != 0.0)
                for (std::size_t y = 0; y < grid_.size(); ++y) out.push_back(y);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    ProblemSpec spec_;
    TorusGrid grid_;
    double threshold_;
    std::optional<QuadratureTable> table_;
    std::vector<std::optional<std::vector<std::size_t>>> cache_;
};

// X_{n+1} = X_n united with every cell reachable in one jump from X_n.
inline ReachableSet reachable_set(JumpSupport& support, std::size_t x, std::size_t n_max) {
    const TorusGrid& g = support.grid();
    if (x >= g.size()) throw UsageError("reachable_set: base point outside the grid");
    ReachableSet rs;
    rs.base = x;
    GridMask cur(g.size(), 0);
    cur[x] = 1;
    rs.masks.push_back(cur);
    std::vector<std::size_t> frontier{x};
    for (std::size_t n = 0; n < n_max; ++n) {
        std::vector<std::size_t> added;
        for (std::size_t xi : frontier)
            for (std::size_t y : support.cells(xi))
                if (!cur[y]) {
                    cur[y] = 1;
                    added.push_back(y);
                }
        if (added.empty()) {
            rs.fixpoint = true;
            break;
        }
        rs.masks.push_back(cur);
        frontier = std::move(added);
    }
    if (!rs.fixpoint && frontier.empty()) rs.fixpoint = true;
    rs.closure = cur;
    return rs;
}

inline ReachableSet reachable_set(const ProblemSpec& spec, const TorusGrid& grid, std::size_t x, std::size_t n_max) {
    JumpSupport s(spec, grid);
    return reachable_set(s, x, n_max);
}

struct CoveringVerdict {
    bool passed = true;
    double r0 = 0.0;
    GridMask point_passed;
    std::size_t failures = 0;
    std::string witness;
};

// Null space of A(x) from a symmetric eigendecomposition; columns are a basis.
inline Eigen::MatrixXd degenerate_directions(const ProblemSpec& spec, const Point& x, double threshold = 1e-10) {
    const int d = spec.dim;
    const SigmaMatrix A = spec.diffusion.diffusion_matrix(x, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A.topLeftCorner(d, d)));
    std::vector<int> idx;
    for (int k = 0; k < d; ++k)
        if (std::abs(es.eigenvalues()(k)) <= threshold) idx.push_back(k);
    Eigen::MatrixXd basis(d, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(idx[c]);
    return basis;
}

// For every grid point x: each cell of B_{r0}(x) lying along x + E_0(x)
// (within half a cell of the line when d = 2) must be in the reachable closure.
inline CoveringVerdict covering_check(const ProblemSpec& spec, const TorusGrid& grid, double r0) {
    if (!(r0 > 0.0)) throw ConfigError("covering radius r0 must be positive");
    const int d = grid.dim();
    const double h = grid.h();
    JumpSupport support(spec, grid);
    CoveringVerdict v;
    v.r0 = r0;
    v.point_passed.assign(grid.size(), 1);
    std::optional<ReachableSet> from_origin;
    for (std::size_t x = 0; x < grid.size(); ++x) {
        const Point px = grid.point(x);
        const Eigen::MatrixXd E0 = degenerate_directions(spec, px);
        if (E0.cols() == 0) continue;
        GridMask closure;
        if (support.translation_invariant()) {
            if (!from_origin) from_origin = reachable_set(support, 0, grid.size());
            closure.assign(grid.size(), 0);
            for (std::size_t y = 0; y < grid.size(); ++y)
                if (from_origin->closure[y]) {
                    const std::size_t shifted =
                        d == 1 ? (y + x) % grid.size()
                               : grid.index(grid.coord(y, 0) + grid.coord(x, 0), grid.coord(y, 1) + grid.coord(x, 1));
                    closure[shifted] = 1;
                }
        } else {
            closure = reachable_set(support, x, grid.size()).closure;
        }
        for (std::size_t y = 0; y < grid.size(); ++y) {
            if (y == x || closure[y]) continue;
            const Point py = grid.point(y);
            if (torus_distance(px, py, d) > r0) continue;
            bool along = E0.cols() == d;
            if (!along) {
                // minimal-image displacement, distance to the line span(e)
                Eigen::Vector2d disp(0.0, 0.0);
                for (int k = 0; k < d; ++k) {
                    double dk = py[k] - px[k];
                    dk -= std::round(dk);
                    disp(k) = dk;
                }
                const Eigen::Vector2d e(E0(0, 0), d == 2 ? E0(1, 0) : 0.0);
                const double along_len = disp.dot(e);
                along = (disp - along_len * e).norm() <= 0.5 * h + 1e-15;
            }
            if (!along) continue;
            if (v.point_passed[x]) {
                v.point_passed[x] = 0;
                ++v.failures;
                if (v.witness.empty())
                    v.witness = "x=" + detail::grid_point_label(grid, x) + " y=" + detail::grid_point_label(grid, y) +
                                " in B_r0(x) along E_0(x) is not reachable";
            }
        }
    }
    v.passed = v.failures == 0;
    return v;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct ComparisonResult {
    bool passed = true;
    double max_violation = 0.0;  // max over pairs, steps and grid of (lower - upper)^+
    std::size_t worst_pair = 0;
    double worst_time = 0.0;
    std::size_t steps = 0;
};

// Evolves every pair in one ensemble (shared theta and steps) and checks
// lower <= upper after every step.
inline ComparisonResult comparison_harness(const ProblemSpec& spec, const TorusGrid& grid,
                                           const std::vector<std::pair<GridFunction, GridFunction>>& pairs,
                                           double T_final, const SchemeParams& params = {}, double tol = 1e-12) {
    if (pairs.empty()) throw UsageError("comparison_harness needs at least one pair");
    std::vector<GridFunction> states;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& [lo, hi] = pairs[k];
        GridFunction::check_same_grid(lo, hi);
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (lo[i] > hi[i]) throw UsageError("comparison pair " + std::to_string(k) + " is not ordered at t = 0");
        states.push_back(lo);
        states.push_back(hi);
    }
    ComparisonResult res;
    EvolutionOptions eo;
    eo.T_final = T_final;
    eo.early_stop = false;
    eo.sample_every = 1000;
    eo.on_step = [&](double t, const std::vector<GridFunction>& s) {
        ++res.steps;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto& lo = s[2 * k];
            const auto& hi = s[2 * k + 1];
            for (std::size_t i = 0; i < lo.size(); ++i) {
                const double viol = lo[i] - hi[i];
                if (viol > res.max_violation) {
                    res.max_violation = viol;
                    res.worst_pair = k;
                    res.worst_time = t;
                }
            }
        }
    };
    Discretization disc(spec, grid, params);
    evolve_ensemble(disc, std::move(states), eo);
    res.passed = res.max_violation <= tol;
    return res;
}

struct BarrierResult {
    bool passed = true;
    double max_violation = 0.0;  // relative to 1 + |barrier|
};

// For lambda = 0: min u0 - H_0 t <= u(t) <= max u0 + H_0 t.
inline BarrierResult barrier_check(const ProblemSpec& spec, const TorusGrid& grid, const GridFunction& u0,
                                   double T_final, const SchemeParams& params = {}, double tol = 1e-12) {
    if (spec.lambda != 0.0) throw ConfigError("barrier_check applies to lambda = 0");
    const double H0 = spec.hamiltonian.H_0;
    const double lo0 = u0.min(), hi0 = u0.max();
    BarrierResult res;
    EvolutionOptions eo;
    eo.T_final = T_final;
    eo.early_stop = false;
    eo.sample_every = 1000;
    eo.on_step = [&](double t, const std::vector<GridFunction>& s) {
        const double lo = lo0 - H0 * t, hi = hi0 + H0 * t;
        for (double v : s[0].values()) {
            res.max_violation = std::max(res.max_violation, (lo - v) / (1.0 + std::abs(lo)));
            res.max_violation = std::max(res.max_violation, (v - hi) / (1.0 + std::abs(hi)));
        }
    };
    Discretization disc(spec, grid, params);
    evolve_ensemble(disc, {u0}, eo);
    res.passed = res.max_violation <= tol;
    return res;
}

// ---------------------------------------------------------------------------
// Exponential change of variables
// ---------------------------------------------------------------------------

// sup |I_h(e^v) - e^v J_h(v)| / sup |I_h(e^v)| with the compensator gradient
// of e^v taken as e^v Dv.
inline double nonlocal_identity_defect(const QuadratureTable& table, const GridFunction& v) {
    const TorusGrid& g = v.grid();
    const GridVectorField dv = centered_gradient(v);
    GridFunction u(g, 0.0);
    GridVectorField du(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        u[i] = std::exp(v[i]);
        for (int k = 0; k < g.dim(); ++k) du.axis[k][i] = u[i] * dv.axis[k][i];
    }
    const GridFunction lhs = apply_Ij(table, u, du);
    const GridFunction jv = apply_Jj(table, v, dv);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        num = std::max(num, std::abs(lhs[i] - u[i] * jv[i]));
        den = std::max(den, std::abs(lhs[i]));
    }
    return den > 0.0 ? num / den : num;
}

struct BernsteinResult {
    double max_relative_defect = 0.0;
    std::vector<double> per_sample;
};

// Both sides of
//   lambda u - Tr(A D^2 u) - I u + H(x, Du)
//     = e^v [lambda + e^{-v} H(x, e^v Dv) - <A Dv, Dv> - Tr(A D^2 v) - J v]
// with u = e^v: the left side uses the discrete operators on u, the right
// side the discrete operators on v. The defect is relative to sup of the left side.
inline BernsteinResult bernstein_identity_check(const ProblemSpec& spec, const TorusGrid& grid,
                                                const std::vector<GridFunction>& v_samples,
                                                const SchemeParams& params = {}) {
    const int d = grid.dim();
    const QuadratureTable table = build_table(spec, grid, params.nodes_per_decade);
    const DiffusionStencil diff(spec, grid);
    BernsteinResult res;
    for (const GridFunction& v : v_samples) {
        if (!(v.grid() == grid)) throw UsageError("bernstein sample lives on a different grid");
        GridFunction u(grid, 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) u[i] = std::exp(v[i]);
        const GridVectorField du = centered_gradient(u), dv = centered_gradient(v);
        GridVectorField du_chain(grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (int k = 0; k < d; ++k) du_chain.axis[k][i] = u[i] * dv.axis[k][i];
        const GridFunction Iu = apply_Ij(table, u, du_chain);
        const GridFunction Jv = apply_Jj(table, v, dv);
        const GridFunction Du2 = diff.apply(u), Dv2 = diff.apply(v);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Point x = grid.point(i);
            const Point pu = du.at(i), pv = dv.at(i);
            const double lhs = spec.lambda * u[i] - Du2[i] - Iu[i] + spec.hamiltonian.value(x, pu, d);
            const SigmaMatrix A = spec.diffusion.diffusion_matrix(x, d);
            double quad = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) quad += A(a, b) * pv[a] * pv[b];
            Point scaled{u[i] * pv[0], u[i] * pv[1]};
            const double Ht = spec.lambda + spec.hamiltonian.value(x, scaled, d) / u[i] - quad;
            const double rhs = u[i] * (Ht - Dv2[i] - Jv[i]);
            num = std::max(num, std::abs(lhs - rhs));
            den = std::max(den, std::abs(lhs));
        }
        const double rel = den > 0.0 ? num / den : num;
        res.per_sample.push_back(rel);
        res.max_relative_defect = std::max(res.max_relative_defect, rel);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Discounted sup bound
// ---------------------------------------------------------------------------

struct SupBoundResult {
    bool passed = false;
    double sup_norm = 0.0;
    double bound = 0.0;  // H_0 / lambda + 10 tol
    double residual = 0.0;
    std::size_t steps = 0;
};

inline SupBoundResult sup_bound_check(const ProblemSpec& spec, const TorusGrid& grid,
                                      const StationaryOptions& opt = {}, const SchemeParams& params = {}) {
    const auto st = solve_stationary(spec, grid, GridFunction(grid, 0.0), opt, params);
    SupBoundResult r;
    r.sup_norm = std::max(std::abs(st.u.max()), std::abs(st.u.min()));
    r.bound = spec.hamiltonian.H_0 / spec.lambda + 10.0 * opt.tol;
    r.passed = r.sup_norm <= r.bound;
    r.residual = st.residual;
    r.steps = st.steps;
    return r;
}

}  // namespace nlhj
