#pragma once

// Uniform periodic grid on the unit torus T^d (d = 1 or 2) and the discrete
// calculus shared by the scheme: one-sided and centered differences,
// oscillation / sup-norm / discrete Lipschitz metrics, CSV output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nlhj/errors.hpp"

namespace nlhj {

// A point of R^d stored with room for two coordinates; unused ones are zero.
using Point = std::array<double, 2>;

inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

// Per-axis wraparound distance min(|x - y|, 1 - |x - y|), combined in l2.
inline double torus_distance(const Point& x, const Point& y, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = std::abs(wrap_unit(x[k]) - wrap_unit(y[k]));
        d = std::min(d, 1.0 - d);
        s += d * d;
    }
    return std::sqrt(s);
}

inline double norm(const Point& p, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += p[k] * p[k];
    return std::sqrt(s);
}

class TorusGrid {
public:
    TorusGrid() = default;

    TorusGrid(int dim, int points_per_axis) : dim_(dim), n_(points_per_axis) {
        if (dim != 1 && dim != 2)
            throw ConfigError("grid dimension must be 1 or 2, got " + std::to_string(dim));
        if (points_per_axis < 8)
            throw ConfigError("grid needs at least 8 points per axis, got " +
                              std::to_string(points_per_axis));
        size_ = dim == 1 ? static_cast<std::size_t>(n_)
                         : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
    }

    int dim() const noexcept { return dim_; }
    int n() const noexcept { return n_; }
    std::size_t size() const noexcept { return size_; }
    double h() const noexcept { return 1.0 / n_; }

    int coord(std::size_t idx, int axis) const noexcept {
        return axis == 0 ? static_cast<int>(idx % n_) : static_cast<int>(idx / n_);
    }

    std::size_t index(int i0, int i1 = 0) const noexcept {
        i0 = ((i0 % n_) + n_) % n_;
        if (dim_ == 1) return static_cast<std::size_t>(i0);
        i1 = ((i1 % n_) + n_) % n_;
        return static_cast<std::size_t>(i1) * n_ + static_cast<std::size_t>(i0);
    }

    // Neighbor of idx shifted by `step` cells along `axis`, with wraparound.
    std::size_t shift(std::size_t idx, int axis, int step) const noexcept {
        int c0 = coord(idx, 0);
        int c1 = dim_ == 2 ? coord(idx, 1) : 0;
        if (axis == 0) c0 += step; else c1 += step;
        return index(c0, c1);
    }

    Point point(std::size_t idx) const noexcept {
        Point p{0.0, 0.0};
        p[0] = static_cast<double>(coord(idx, 0)) / n_;
        if (dim_ == 2) p[1] = static_cast<double>(coord(idx, 1)) / n_;
        return p;
    }

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
        return a.dim_ == b.dim_ && a.n_ == b.n_;
    }

private:
    int dim_ = 1;
    int n_ = 8;
    std::size_t size_ = 8;
};

class GridFunction {
public:
    GridFunction() = default;

    explicit GridFunction(const TorusGrid& grid, double value = 0.0)
        : grid_(grid), values_(grid.size(), value) {
        if (!std::isfinite(value)) throw ConfigError("grid function value must be finite");
    }

    GridFunction(const TorusGrid& grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw ConfigError("grid function length " + std::to_string(values_.size()) +
                              " does not match grid size " + std::to_string(grid_.size()));
        for (double v : values_)
            if (!std::isfinite(v)) throw ConfigError("grid function has a non-finite value");
    }

    static GridFunction sample(const TorusGrid& grid, const std::function<double(const Point&)>& f) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.point(i));
        return GridFunction(grid, std::move(v));
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }

    double mean() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s / static_cast<double>(values_.size());
    }

    GridFunction& operator+=(double c) {
        for (double& v : values_) v += c;
        return *this;
    }

    friend GridFunction operator+(GridFunction u, double c) { return u += c; }
    friend GridFunction operator-(GridFunction u, double c) { return u += -c; }

    friend GridFunction operator-(const GridFunction& a, const GridFunction& b) {
        check_same_grid(a, b);
        GridFunction r = a;
        for (std::size_t i = 0; i < r.size(); ++i) r.values_[i] -= b.values_[i];
        return r;
    }

    friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
        check_same_grid(a, b);
        GridFunction r = a;
        for (std::size_t i = 0; i < r.size(); ++i) r.values_[i] += b.values_[i];
        return r;
    }

    static void check_same_grid(const GridFunction& a, const GridFunction& b) {
        if (!(a.grid_ == b.grid_)) throw UsageError("grid functions live on different grids");
    }

private:
    TorusGrid grid_;
    std::vector<double> values_;
};

inline double sup_distance(const GridFunction& a, const GridFunction& b) {
    GridFunction::check_same_grid(a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Per-axis components of a vector field on the grid.
struct GridVectorField {
    TorusGrid grid;
    std::array<std::vector<double>, 2> axis;

    explicit GridVectorField(const TorusGrid& g) : grid(g) {
        for (int k = 0; k < g.dim(); ++k) axis[k].assign(g.size(), 0.0);
    }

    Point at(std::size_t i) const noexcept {
        Point p{0.0, 0.0};
        for (int k = 0; k < grid.dim(); ++k) p[k] = axis[k][i];
        return p;
    }
};

struct UpwindGradients {
    GridVectorField forward;   // D+ u
    GridVectorField backward;  // D- u
};

inline UpwindGradients upwind_gradients(const GridFunction& u) {
    const TorusGrid& g = u.grid();
    UpwindGradients out{GridVectorField(g), GridVectorField(g)};
    const double inv_h = static_cast<double>(g.n());
    for (int k = 0; k < g.dim(); ++k) {
        auto& fwd = out.forward.axis[k];
        auto& bwd = out.backward.axis[k];
        for (std::size_t i = 0; i < g.size(); ++i) {
            fwd[i] = (u[g.shift(i, k, 1)] - u[i]) * inv_h;
            bwd[i] = (u[i] - u[g.shift(i, k, -1)]) * inv_h;
        }
    }
    return out;
}

inline GridVectorField centered_gradient(const GridFunction& u) {
    const TorusGrid& g = u.grid();
    GridVectorField out(g);
    const double inv_2h = 0.5 * static_cast<double>(g.n());
    for (int k = 0; k < g.dim(); ++k)
        for (std::size_t i = 0; i < g.size(); ++i)
            out.axis[k][i] = (u[g.shift(i, k, 1)] - u[g.shift(i, k, -1)]) * inv_2h;
    return out;
}

struct GridMetrics {
    double osc = 0.0;
    double sup_norm = 0.0;
    double lipschitz = 0.0;
};

// Discrete Lipschitz constant from nearest-neighbor differences along each axis.
inline double discrete_lipschitz(const GridFunction& u) {
    const TorusGrid& g = u.grid();
    const double inv_h = static_cast<double>(g.n());
    double lip = 0.0;
    for (int k = 0; k < g.dim(); ++k)
        for (std::size_t i = 0; i < g.size(); ++i)
            lip = std::max(lip, std::abs(u[g.shift(i, k, 1)] - u[i]) * inv_h);
    return lip;
}

inline GridMetrics metrics(const GridFunction& u) {
    GridMetrics m;
    double lo = u[0], hi = u[0], sup = 0.0;
    for (double v : u.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sup = std::max(sup, std::abs(v));
    }
    m.osc = hi - lo;
    m.sup_norm = sup;
    m.lipschitz = discrete_lipschitz(u);
    return m;
}

// Round-trippable decimal formatting used by every CSV writer.
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Columns: index, x0[, x1], value.
inline void write_csv(std::ostream& os, const GridFunction& u) {
    const TorusGrid& g = u.grid();
    os << (g.dim() == 1 ? "index,x0,value\n" : "index,x0,x1,value\n");
    for (std::size_t i = 0; i < u.size(); ++i) {
        Point p = g.point(i);
        os << i << ',' << format_real(p[0]);
        if (g.dim() == 2) os << ',' << format_real(p[1]);
        os << ',' << format_real(u[i]) << '\n';
    }
}

}  // namespace nlhj
