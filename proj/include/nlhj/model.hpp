#pragma once

// Problem instances for
//
//     lambda u - Tr(A(x) D^2 u) - I^j(u, x) + H(x, Du) = 0      (stationary)
//     u_t      - Tr(A(x) D^2 u) - I^j(u, x) + H(x, Du) = 0      (evolution)
//
// on the periodic torus, with A = sigma sigma^T, a coercive Hamiltonian and a
// Levy-Ito jump operator, plus the structural hypotheses on that data written
// as sampled predicates. Each checker falsifies on a deterministic
// quasi-random sample; a pass certifies the inequality on the sample only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlhj/errors.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/sampling.hpp"

namespace nlhj {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Periodic scalar coefficients
// ---------------------------------------------------------------------------

// A Z^d-periodic scalar field with known range and Lipschitz bound. The
// builtin shapes average a 1-periodic profile over the axes:
//     offset + amplitude * (1/d) sum_k phi(2 pi frequency x_k).
class ScalarField {
public:
    enum class Shape { constant, cosine, sine, cos_squared, custom };

    ScalarField() = default;

    static ScalarField constant(double value) {
        ScalarField f;
        f.shape_ = Shape::constant;
        f.offset_ = value;
        return f;
    }

    static ScalarField cosine(double offset, double amplitude, double frequency = 1.0) {
        return periodic(Shape::cosine, offset, amplitude, frequency);
    }

    static ScalarField sine(double offset, double amplitude, double frequency = 1.0) {
        return periodic(Shape::sine, offset, amplitude, frequency);
    }

    static ScalarField cos_squared(double offset, double amplitude, double frequency = 1.0) {
        return periodic(Shape::cos_squared, offset, amplitude, frequency);
    }

    // User-supplied field; the caller vouches for the declared bounds.
    static ScalarField custom(std::function<double(const Point&)> fn, double min, double max,
                              double lipschitz) {
        ScalarField f;
        f.shape_ = Shape::custom;
        f.fn_ = std::move(fn);
        f.min_ = min;
        f.max_ = max;
        f.lip_ = lipschitz;
        return f;
    }

    Shape shape() const noexcept { return shape_; }
    double offset() const noexcept { return offset_; }
    double amplitude() const noexcept { return amplitude_; }
    double frequency() const noexcept { return frequency_; }

    double operator()(const Point& x, int dim) const {
        if (shape_ == Shape::constant) return offset_;
        if (shape_ == Shape::custom) return fn_(x);
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double t = kTwoPi * frequency_ * x[k];
            switch (shape_) {
                case Shape::cosine: s += std::cos(t); break;
                case Shape::sine: s += std::sin(t); break;
                default: {
                    const double c = std::cos(t);
                    s += c * c;
                }
            }
        }
        return offset_ + amplitude_ * s / dim;
    }

    double min() const noexcept {
        switch (shape_) {
            case Shape::constant: return offset_;
            case Shape::cosine:
            case Shape::sine: return offset_ - std::abs(amplitude_);
            case Shape::cos_squared: return offset_ + std::min(0.0, amplitude_);
            default: return min_;
        }
    }

    double max() const noexcept {
        switch (shape_) {
            case Shape::constant: return offset_;
            case Shape::cosine:
            case Shape::sine: return offset_ + std::abs(amplitude_);
            case Shape::cos_squared: return offset_ + std::max(0.0, amplitude_);
            default: return max_;
        }
    }

    double sup_abs() const noexcept { return std::max(std::abs(min()), std::abs(max())); }

    // Lipschitz bound for the torus metric in dimension `dim`.
    double lipschitz(int dim) const noexcept {
        if (shape_ == Shape::constant) return 0.0;
        if (shape_ == Shape::custom) return lip_;
        return std::abs(amplitude_) * kTwoPi * frequency_ / std::sqrt(static_cast<double>(dim));
    }

    std::string describe() const {
        std::ostringstream os;
        switch (shape_) {
            case Shape::constant: os << "constant(" << offset_ << ")"; break;
            case Shape::cosine: os << "cosine(" << offset_ << "," << amplitude_ << "," << frequency_ << ")"; break;
            case Shape::sine: os << "sine(" << offset_ << "," << amplitude_ << "," << frequency_ << ")"; break;
            case Shape::cos_squared:
                os << "cos_squared(" << offset_ << "," << amplitude_ << "," << frequency_ << ")";
                break;
            default: os << "custom";
        }
        return os.str();
    }

private:
    static ScalarField periodic(Shape s, double offset, double amplitude, double frequency) {
        if (!(frequency > 0.0) || std::floor(frequency) != frequency)
            throw ConfigError("field frequency must be a positive integer for periodicity");
        ScalarField f;
        f.shape_ = s;
        f.offset_ = offset;
        f.amplitude_ = amplitude;
        f.frequency_ = frequency;
        return f;
    }

    Shape shape_ = Shape::constant;
    double offset_ = 0.0;
    double amplitude_ = 0.0;
    double frequency_ = 1.0;
    std::function<double(const Point&)> fn_;
    double min_ = 0.0, max_ = 0.0, lip_ = 0.0;
};

// ---------------------------------------------------------------------------
// Diffusion factor sigma(x), A = sigma sigma^T
// ---------------------------------------------------------------------------

using SigmaMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

inline double spectral_norm(const SigmaMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<SigmaMatrix> svd(m);
    return svd.singularValues()(0);
}

struct DiffusionFactor {
    enum class Family { none, constant, sqrt_field, sine, custom };

    Family family = Family::none;
    int columns = 1;             // k <= d
    double scale = 0.0;          // constant: sigma = scale * I; sine: amplitude
    double frequency = 1.0;      // sine
    ScalarField field;           // sqrt_field: a(x) with sigma = diag(sqrt(a))
    std::function<SigmaMatrix(const Point&)> custom;
    double lipschitz_bound = 0.0;  // declared L_sigma

    static DiffusionFactor none() { return {}; }

    static DiffusionFactor constant(double s) {
        DiffusionFactor d;
        d.family = Family::constant;
        d.scale = s;
        return d;
    }

    // Diagonal factor with sigma_kk^2 = a(x): the d = 1 form of A(x) = a(x).
    static DiffusionFactor sqrt_field(ScalarField a) {
        DiffusionFactor d;
        d.family = Family::sqrt_field;
        d.field = std::move(a);
        return d;
    }

    static DiffusionFactor sine(double amplitude, double frequency = 1.0) {
        DiffusionFactor d;
        d.family = Family::sine;
        d.scale = amplitude;
        d.frequency = frequency;
        return d;
    }

    static DiffusionFactor from_function(std::function<SigmaMatrix(const Point&)> fn, int columns,
                                         double declared_lipschitz) {
        DiffusionFactor d;
        d.family = Family::custom;
        d.custom = std::move(fn);
        d.columns = columns;
        d.lipschitz_bound = declared_lipschitz;
        return d;
    }

    int column_count(int dim) const noexcept { return family == Family::custom ? columns : dim; }

    SigmaMatrix sigma(const Point& x, int dim) const {
        SigmaMatrix s = SigmaMatrix::Zero(dim, column_count(dim));
        switch (family) {
            case Family::none: break;
            case Family::constant:
                for (int k = 0; k < dim; ++k) s(k, k) = scale;
                break;
            case Family::sqrt_field: {
                const double a = field(x, dim);
                const double r = std::sqrt(std::max(0.0, a));
                for (int k = 0; k < dim; ++k) s(k, k) = r;
                break;
            }
            case Family::sine:
                for (int k = 0; k < dim; ++k) s(k, k) = scale * std::sin(kTwoPi * frequency * x[k]);
                break;
            case Family::custom: s = custom(x); break;
        }
        return s;
    }

    SigmaMatrix diffusion_matrix(const Point& x, int dim) const {
        SigmaMatrix s = sigma(x, dim);
        return s * s.transpose();
    }

    // Analytic max(sup|sigma|, Lip(sigma)) for the builtin families.
    double analytic_lipschitz(int dim) const {
        switch (family) {
            case Family::none: return 0.0;
            case Family::constant: return std::abs(scale);
            case Family::sine: return std::max(std::abs(scale), std::abs(scale) * kTwoPi * frequency);
            case Family::sqrt_field: {
                const double lo = field.min();
                const double sup = std::sqrt(std::max(0.0, field.max()));
                const double lip_a = field.lipschitz(dim);
                if (lip_a == 0.0) return sup;
                if (lo <= 0.0) return kInf;
                return std::max(sup, lip_a / (2.0 * std::sqrt(lo)));
            }
            case Family::custom: return lipschitz_bound;
        }
        return lipschitz_bound;
    }
};

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

struct Hamiltonian {
    enum class Family { power_coercive, custom };

    Family family = Family::power_coercive;
    double m = 2.0;
    ScalarField a = ScalarField::constant(1.0);
    ScalarField f = ScalarField::constant(0.0);
    std::function<double(const Point&, const Point&)> custom_value;
    std::function<Point(const Point&, const Point&)> custom_gradient;

    // Declared structural constants.
    double b_m = 0.0;
    double K = 0.0;
    double L_H = 0.0;
    double H_0 = 0.0;
    std::optional<double> zeta_slope;  // zeta(r) = zeta_slope * r
    std::optional<double> eta;         // coercivity constant, default b_m / 2

    // H(x, p) = a(x)|p|^m - f(x), constants derived from the coefficient ranges.
    static Hamiltonian power_coercive(double m, ScalarField a, ScalarField f, int dim) {
        Hamiltonian h;
        h.family = Family::power_coercive;
        h.m = m;
        h.a = std::move(a);
        h.f = std::move(f);
        h.derive_constants(dim);
        return h;
    }

    static Hamiltonian from_functions(std::function<double(const Point&, const Point&)> value,
                                      std::function<Point(const Point&, const Point&)> gradient, double m) {
        Hamiltonian h;
        h.family = Family::custom;
        h.custom_value = std::move(value);
        h.custom_gradient = std::move(gradient);
        h.m = m;
        return h;
    }

    void derive_constants(int dim) {
        if (family != Family::power_coercive) return;
        const double a_min = a.min(), a_max = a.max();
        b_m = (m - 1.0) * a_min;
        K = std::max(0.0, -f.min());
        L_H = std::max(a.lipschitz(dim), f.lipschitz(dim));
        H_0 = f.sup_abs();
        zeta_slope = a_max * m * std::max(1.0, std::pow(2.0, m - 2.0));
    }

    double value(const Point& x, const Point& p, int dim) const {
        if (family == Family::custom) return custom_value(x, p);
        return a(x, dim) * std::pow(norm(p, dim), m) - f(x, dim);
    }

    Point gradient(const Point& x, const Point& p, int dim) const {
        if (family == Family::custom) return custom_gradient(x, p);
        const double r = norm(p, dim);
        Point g{0.0, 0.0};
        if (r == 0.0) return g;
        const double c = a(x, dim) * m * std::pow(r, m - 2.0);
        for (int k = 0; k < dim; ++k) g[k] = c * p[k];
        return g;
    }

    double coercivity_eta() const { return eta.value_or(0.5 * b_m); }
};

// ---------------------------------------------------------------------------
// Levy measure and jump function
// ---------------------------------------------------------------------------

struct Atom {
    Point z{0.0, 0.0};
    double mass = 0.0;
};

// How the measure beyond the tail radius enters the discrete operator.
enum class TailTreatment {
    drop,        // truncate: the far field is removed and its mass reported
    periodized,  // far-field arrivals equidistribute on the torus: mass * (mean(u) - u(x))
};

struct LevyData {
    enum class Family { none, fractional, finite, atomic };
    enum class Jump { translation, modulated };

    Family family = Family::none;
    double order = 1.0;          // fractional: nu(dz) = |z|^{-d-order} dz
    double finite_mass = 0.0;    // finite: uniform density on the ball of radius finite_radius
    double finite_radius = 1.0;
    std::vector<Atom> atoms;

    Jump jump = Jump::translation;
    ScalarField g = ScalarField::constant(1.0);  // modulated: j(x,z) = g(x) z

    double tail_radius = 10.0;
    TailTreatment tail = TailTreatment::periodized;

    // Declared constants; negative means "derive on validation".
    double C_nu = -1.0;
    double C_j = -1.0;
    std::function<double(double)> C_a;  // a -> C_a

    static LevyData none() { return {}; }

    static LevyData fractional(double order) {
        LevyData l;
        l.family = Family::fractional;
        l.order = order;
        return l;
    }

    static LevyData finite(double mass, double radius) {
        LevyData l;
        l.family = Family::finite;
        l.finite_mass = mass;
        l.finite_radius = radius;
        return l;
    }

    static LevyData atomic(std::vector<Atom> atoms) {
        LevyData l;
        l.family = Family::atomic;
        l.atoms = std::move(atoms);
        return l;
    }

    LevyData& modulated(ScalarField gfield) {
        jump = Jump::modulated;
        g = std::move(gfield);
        return *this;
    }

    bool translation_invariant() const noexcept {
        return jump == Jump::translation || g.shape() == ScalarField::Shape::constant;
    }

    double jump_factor(const Point& x, int dim) const {
        return jump == Jump::translation ? 1.0 : g(x, dim);
    }

    Point jump_at(const Point& x, const Point& z, int dim) const {
        const double s = jump_factor(x, dim);
        return Point{s * z[0], dim == 2 ? s * z[1] : 0.0};
    }

    bool radial() const noexcept { return family == Family::fractional || family == Family::finite; }

    static double sphere_area(int dim) noexcept { return dim == 1 ? 2.0 : kTwoPi; }
    static double ball_volume(int dim) noexcept { return dim == 1 ? 2.0 : std::numbers::pi; }

    // int_{lo < |z| <= hi} |z|^p nu(dz) for the radial families (hi may be +inf).
    double radial_moment(double p, double lo, double hi, int dim) const {
        if (!(hi > lo)) return 0.0;
        const double S = sphere_area(dim);
        if (family == Family::fractional) {
            // S * int r^{p - 1 - order} dr
            const double e = p - order;
            if (std::abs(e) < 1e-14) {
                if (lo == 0.0 || hi == kInf) return kInf;
                return S * std::log(hi / lo);
            }
            if (lo == 0.0 && e < 0.0) return kInf;
            if (hi == kInf && e > 0.0) return kInf;
            const double top = hi == kInf ? 0.0 : std::pow(hi, e);
            const double bot = lo == 0.0 ? 0.0 : std::pow(lo, e);
            return S * (top - bot) / e;
        }
        if (family == Family::finite) {
            const double top = std::min(hi, finite_radius);
            if (!(top > lo)) return 0.0;
            const double rho = finite_mass / (ball_volume(dim) * std::pow(finite_radius, dim));
            const double e = p + dim;
            return rho * S * (std::pow(top, e) - std::pow(lo, e)) / e;
        }
        if (family == Family::atomic) {
            double s = 0.0;
            for (const Atom& at : atoms) {
                const double r = norm(at.z, dim);
                if (r > lo && r <= hi) s += at.mass * std::pow(r, p);
            }
            return s;
        }
        return 0.0;
    }

    double mass_between(double lo, double hi, int dim) const { return radial_moment(0.0, lo, hi, dim); }

    // Radial density rho(r) with nu(dz) = rho(|z|) dz, for quadrature cross-checks.
    double radial_density(double r, int dim) const {
        if (family == Family::fractional) return std::pow(r, -dim - order);
        if (family == Family::finite)
            return r <= finite_radius ? finite_mass / (ball_volume(dim) * std::pow(finite_radius, dim)) : 0.0;
        return 0.0;
    }

    // int 1 ^ |z|^2 nu(dz).
    double levy_moment(int dim) const {
        return radial_moment(2.0, 0.0, 1.0, dim) + radial_moment(0.0, 1.0, kInf, dim);
    }

    double tail_mass(int dim) const { return mass_between(tail_radius, kInf, dim); }

    // Analytic sup|g| and Lip(g)-based bound for (J1).
    double analytic_C_j(int dim) const {
        if (jump == Jump::translation) return 1.0;
        return std::max(g.sup_abs(), g.lipschitz(dim));
    }

    double analytic_C_a(double a, int dim) const {
        if (jump == Jump::translation) return 0.0;
        const double lip = g.lipschitz(dim);
        if (lip == 0.0) return 0.0;
        return lip * radial_moment(1.0, a, kInf, dim);
    }

    double declared_C_a(double a, int dim) const { return C_a ? C_a(a) : analytic_C_a(a, dim); }
};

// ---------------------------------------------------------------------------
// ProblemSpec
// ---------------------------------------------------------------------------

struct InitialData {
    ScalarField field;
    double lipschitz = 0.0;  // declared L_0
};

struct ProblemSpec {
    int dim = 1;
    double lambda = 0.0;
    DiffusionFactor diffusion;
    Hamiltonian hamiltonian;
    LevyData levy;
    std::optional<InitialData> initial;

    // Fills derived constants and throws ConfigError on an ill-formed instance.
    void validate() {
        if (dim != 1 && dim != 2) throw ConfigError("problem.dimension must be 1 or 2");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("problem.lambda must be >= 0");
        if (!(hamiltonian.m > 1.0)) throw ConfigError("hamiltonian.m must be > 1");
        if (hamiltonian.family == Hamiltonian::Family::power_coercive && !(hamiltonian.a.min() > 0.0))
            throw ConfigError("hamiltonian.a must be bounded below by a positive constant");
        if (diffusion.family == DiffusionFactor::Family::sqrt_field && diffusion.field.min() < 0.0)
            throw ConfigError("diffusion.a must be nonnegative");
        if (diffusion.family == DiffusionFactor::Family::custom && diffusion.columns > dim)
            throw ConfigError("diffusion factor must have at most d columns");
        if (diffusion.family != DiffusionFactor::Family::custom && diffusion.lipschitz_bound <= 0.0)
            diffusion.lipschitz_bound = diffusion.analytic_lipschitz(dim);
        validate_levy();
    }

    void validate_levy() {
        LevyData& l = levy;
        if (l.family == LevyData::Family::fractional && !(l.order > 0.0 && l.order < 2.0))
            throw ConfigError("levy.order must lie in (0,2), got " + std::to_string(l.order));
        if (l.family == LevyData::Family::finite && (!(l.finite_mass >= 0.0) || !(l.finite_radius > 0.0)))
            throw ConfigError("levy finite measure needs mass >= 0 and radius > 0");
        for (const Atom& at : l.atoms)
            if (!(at.mass >= 0.0)) throw ConfigError("levy atom mass must be nonnegative");
        if (!(l.tail_radius >= 1.0)) throw ConfigError("levy.tail_radius must be >= 1");
        if (l.jump == LevyData::Jump::modulated && !(l.g.min() > 0.0))
            throw ConfigError("jump modulation g must be bounded below by a positive constant");
        if (l.C_nu < 0.0) l.C_nu = l.levy_moment(dim);
        if (l.C_j < 0.0) l.C_j = l.analytic_C_j(dim);
    }
};

// ---------------------------------------------------------------------------
// Assumption checkers
// ---------------------------------------------------------------------------

struct CheckReport {
    std::string name;
    bool passed = true;
    double worst_slack = kInf;  // min over samples of (rhs - lhs); negative means violated
    std::string witness;
    std::size_t samples = 0;

    void record(double slack, const std::function<std::string()>& describe) {
        ++samples;
        if (slack < worst_slack) {
            worst_slack = slack;
            witness = describe();
        }
    }
};

namespace detail {

inline Point to_point(const std::vector<double>& v, std::size_t off, int dim) {
    Point p{0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = v[off + static_cast<std::size_t>(k)];
    return p;
}

inline std::string fmt_point(const Point& p, int dim) {
    std::ostringstream os;
    os.precision(6);
    os << "(" << p[0];
    if (dim == 2) os << "," << p[1];
    os << ")";
    return os.str();
}

// Unit directions used for gradient samples: +-e in d = 1, eight angles in d = 2.
inline std::vector<Point> directions(int dim) {
    if (dim == 1) return {Point{1.0, 0.0}, Point{-1.0, 0.0}};
    std::vector<Point> out;
    for (int i = 0; i < 8; ++i) {
        const double t = kTwoPi * i / 8.0 + 0.1;
        out.push_back(Point{std::cos(t), std::sin(t)});
    }
    return out;
}

inline std::vector<Point> gradient_samples(int dim, double p_max) {
    std::vector<Point> out{Point{0.0, 0.0}};
    for (double r : log_spaced(1e-3, p_max, 40))
        for (const Point& e : directions(dim)) out.push_back(Point{r * e[0], r * e[1]});
    return out;
}

inline Point offset_point(const Point& x, const Point& e, double r) {
    return Point{x[0] + r * e[0], x[1] + r * e[1]};
}

}  // namespace detail

inline constexpr double kCheckTolerance = 1e-10;
inline constexpr double kDefaultGradientCap = 50.0;

// (A): |sigma(x)| <= L, |sigma(x) - sigma(y)| <= L |x - y|, sigma sigma^T PSD.
// The Lipschitz slack is normalized per unit distance so the witness lands
// where the difference quotient is steepest.
inline CheckReport check_diffusion(const ProblemSpec& spec, int samples, std::uint64_t seed) {
    constexpr double tol = 1e-12;
    const int d = spec.dim;
    const DiffusionFactor& df = spec.diffusion;
    const double L = df.lipschitz_bound;
    CheckReport rep;
    rep.name = "check_diffusion";
    QuasiRandom qr(static_cast<std::size_t>(2 * d), seed);
    const auto seps = log_spaced(1e-6, 0.5, 16);
    const auto dirs = detail::directions(d);
    for (int s = 0; s < samples; ++s) {
        const auto v = qr.next();
        const Point x = detail::to_point(v, 0, d);
        const SigmaMatrix sx = df.sigma(x, d);
        const double nx = spectral_norm(sx);
        rep.record(L + tol - nx, [&] { return "|sigma" + detail::fmt_point(x, d) + "| exceeds L_sigma"; });
        Eigen::SelfAdjointEigenSolver<SigmaMatrix> eig(sx * sx.transpose());
        rep.record(eig.eigenvalues().minCoeff() + tol,
                   [&] { return "A" + detail::fmt_point(x, d) + " not positive semidefinite"; });
        for (double r : seps)
            for (const Point& e : dirs) {
                const Point y = detail::offset_point(x, e, r);
                const double dist = torus_distance(x, y, d);
                if (dist == 0.0) continue;
                const double diff = spectral_norm(sx - df.sigma(y, d));
                rep.record((L * dist + tol - diff) / dist, [&] {
                    return "x=" + detail::fmt_point(x, d) + " y=" + detail::fmt_point(y, d) +
                           " quotient=" + std::to_string(diff / dist);
                });
            }
        // a far pair from the second half of the sample coordinates
        const Point y = detail::to_point(v, static_cast<std::size_t>(d), d);
        const double dist = torus_distance(x, y, d);
        if (dist > 0.0) {
            const double diff = spectral_norm(sx - df.sigma(y, d));
            rep.record((L * dist + tol - diff) / dist, [&] {
                return "x=" + detail::fmt_point(x, d) + " y=" + detail::fmt_point(y, d) +
                       " quotient=" + std::to_string(diff / dist);
            });
        }
    }
    rep.passed = rep.worst_slack >= 0.0;
    return rep;
}

// (H1): mu H(x, p/mu) - H(x, p) >= (1 - mu)(b_m |p|^m - K) for mu in (0,1).
inline CheckReport check_H1(const ProblemSpec& spec, int samples, std::uint64_t seed,
                            double p_max = kDefaultGradientCap) {
    const int d = spec.dim;
    const Hamiltonian& H = spec.hamiltonian;
    CheckReport rep;
    rep.name = "check_H1";
    QuasiRandom qr(static_cast<std::size_t>(d), seed);
    const auto ps = detail::gradient_samples(d, p_max);
    const auto one_minus_mu = log_spaced(1e-6, 0.999, 24);
    for (int s = 0; s < samples; ++s) {
        const Point x = detail::to_point(qr.next(), 0, d);
        for (const Point& p : ps) {
            const double hp = H.value(x, p, d);
            const double pm = std::pow(norm(p, d), H.m);
            for (double om : one_minus_mu) {
                const double mu = 1.0 - om;
                const Point q{p[0] / mu, p[1] / mu};
                const double lhs = mu * H.value(x, q, d) - hp;
                const double rhs = om * (H.b_m * pm - H.K);
                rep.record(lhs - rhs + kCheckTolerance, [&] {
                    return "x=" + detail::fmt_point(x, d) + " p=" + detail::fmt_point(p, d) +
                           " mu=" + std::to_string(mu);
                });
            }
        }
    }
    rep.passed = rep.worst_slack >= 0.0;
    return rep;
}

// (H2'): H(y, p+q) - H(x, p) <= L_H |x-y| (1 + |p|^m) + zeta(|q|)(1 + |p|^{m-1}), |q| <= 1.
inline CheckReport check_H2prime(const ProblemSpec& spec, int samples, std::uint64_t seed,
                                 double p_max = kDefaultGradientCap) {
    const int d = spec.dim;
    const Hamiltonian& H = spec.hamiltonian;
    if (!H.zeta_slope) throw ConfigError("check_H2prime needs a declared modulus zeta (hamiltonian.zeta_slope)");
    const double cz = *H.zeta_slope;
    CheckReport rep;
    rep.name = "check_H2prime";
    QuasiRandom qr(static_cast<std::size_t>(d), seed);
    const auto ps = detail::gradient_samples(d, p_max);
    const auto dirs = detail::directions(d);
    std::vector<double> qmags{0.0};
    for (double r : log_spaced(1e-3, 1.0, 8)) qmags.push_back(r);
    const auto seps = log_spaced(1e-4, 0.5, 6);
    for (int s = 0; s < samples; ++s) {
        const Point x = detail::to_point(qr.next(), 0, d);
        for (double r : seps) {
            const Point y = detail::offset_point(x, dirs[static_cast<std::size_t>(s) % dirs.size()], r);
            const double dist = torus_distance(x, y, d);
            for (const Point& p : ps) {
                const double hx = H.value(x, p, d);
                const double pn = norm(p, d);
                const double grow_m = 1.0 + std::pow(pn, H.m);
                const double grow_m1 = 1.0 + std::pow(pn, H.m - 1.0);
                for (double qm : qmags)
                    for (const Point& e : dirs) {
                        const Point pq{p[0] + qm * e[0], p[1] + qm * e[1]};
                        const double lhs = H.value(y, pq, d) - hx;
                        const double rhs = H.L_H * dist * grow_m + cz * qm * grow_m1;
                        rep.record(rhs - lhs + kCheckTolerance, [&] {
                            return "x=" + detail::fmt_point(x, d) + " y=" + detail::fmt_point(y, d) +
                                   " p=" + detail::fmt_point(p, d) + " |q|=" + std::to_string(qm);
                        });
                        if (qm == 0.0) break;
                    }
            }
        }
    }
    rep.passed = rep.worst_slack >= 0.0;
    return rep;
}

// Midpoint rule for int_{|z|<1} |z|^2 nu(dz) on a graded radial mesh
// r_i = (i/n)^grade, grade = 2/(2 - order) for the fractional family so the
// weak singularity at the origin does not spoil convergence.
inline double inner_ball_moment_quadrature(const LevyData& l, int dim, int resolution) {
    if (!l.radial()) return l.radial_moment(2.0, 0.0, 1.0, dim);
    const double grade = l.family == LevyData::Family::fractional ? 2.0 / (2.0 - l.order) : 1.0;
    const double S = LevyData::sphere_area(dim);
    double sum = 0.0;
    double prev = 0.0;
    for (int i = 1; i <= resolution; ++i) {
        const double r = std::pow(static_cast<double>(i) / resolution, grade);
        const double mid = 0.5 * (prev + r);
        sum += S * std::pow(mid, dim + 1) * l.radial_density(mid, dim) * (r - prev);
        prev = r;
    }
    return sum;
}

struct LevyCheckReport {
    CheckReport moment;  // (M')
    CheckReport j1;      // (J1)
    CheckReport j2;      // (J2), a in {0.5, 1, 2}
    double moment_value = 0.0;        // analytic inner ball + tail
    double inner_ball_analytic = 0.0;
    double inner_ball_quadrature = 0.0;
    bool passed() const noexcept { return moment.passed && j1.passed && j2.passed; }
};

inline LevyCheckReport check_levy(const ProblemSpec& spec, int quad_resolution, int samples = 64,
                                  std::uint64_t seed = 0) {
    const int d = spec.dim;
    const LevyData& l = spec.levy;
    if (l.family == LevyData::Family::fractional && !(l.order > 0.0 && l.order < 2.0))
        throw ConfigError("levy.order must lie in (0,2)");
    LevyCheckReport out;
    out.moment.name = "check_levy.M'";
    out.j1.name = "check_levy.J1";
    out.j2.name = "check_levy.J2";

    out.inner_ball_analytic = l.radial_moment(2.0, 0.0, 1.0, d);
    out.inner_ball_quadrature = inner_ball_moment_quadrature(l, d, quad_resolution);
    const double tail = l.radial_moment(0.0, 1.0, kInf, d);
    out.moment_value = out.inner_ball_analytic + tail;
    const double c_nu = l.C_nu < 0.0 ? l.levy_moment(d) : l.C_nu;
    out.moment.record(c_nu + kCheckTolerance - out.moment_value, [&] {
        return "int 1^|z|^2 dnu = " + std::to_string(out.moment_value) + " > C_nu";
    });
    out.moment.passed = out.moment.worst_slack >= 0.0;

    const double c_j = l.C_j < 0.0 ? l.analytic_C_j(d) : l.C_j;
    QuasiRandom qr(static_cast<std::size_t>(3 * d), seed);
    const auto zmags = log_spaced(1e-3, l.tail_radius, 12);
    const auto dirs = detail::directions(d);
    const std::array<double, 3> radii{0.5, 1.0, 2.0};
    std::array<double, 3> first_moments{};
    for (std::size_t i = 0; i < radii.size(); ++i) first_moments[i] = l.radial_moment(1.0, radii[i], kInf, d);
    for (int s = 0; s < samples; ++s) {
        const auto v = qr.next();
        const Point x = detail::to_point(v, 0, d);
        const Point y = detail::to_point(v, static_cast<std::size_t>(d), d);
        const double dist = torus_distance(x, y, d);
        for (double r : zmags)
            for (const Point& e : dirs) {
                const Point z{r * e[0], r * e[1]};
                const Point jx = l.jump_at(x, z, d), jy = l.jump_at(y, z, d);
                out.j1.record(c_j * r - norm(jx, d) + kCheckTolerance,
                              [&] { return "|j(x,z)| > C_j|z| at x=" + detail::fmt_point(x, d); });
                const Point dj{jx[0] - jy[0], jx[1] - jy[1]};
                out.j1.record(c_j * r * dist - norm(dj, d) + kCheckTolerance, [&] {
                    return "|j(x,z)-j(y,z)| > C_j|z||x-y| at x=" + detail::fmt_point(x, d) +
                           " y=" + detail::fmt_point(y, d);
                });
            }
        // For j = g(x) z the (J2) integrand is |g(x) - g(y)| |z|.
        const double dg = std::abs(l.jump_factor(x, d) - l.jump_factor(y, d));
        for (std::size_t i = 0; i < radii.size(); ++i) {
            const double lhs = dg == 0.0 ? 0.0 : dg * first_moments[i];
            const double rhs = l.declared_C_a(radii[i], d) * dist;
            out.j2.record(rhs - lhs + kCheckTolerance, [&] {
                return "a=" + std::to_string(radii[i]) + " x=" + detail::fmt_point(x, d) +
                       " y=" + detail::fmt_point(y, d);
            });
        }
    }
    out.j1.passed = out.j1.worst_slack >= 0.0;
    out.j2.passed = out.j2.worst_slack >= 0.0;
    return out;
}

// The three jump-measure reports folded into one row.
inline CheckReport combined(const LevyCheckReport& l) {
    CheckReport rep;
    rep.name = "check_levy";
    for (const CheckReport* part : {&l.moment, &l.j1, &l.j2}) {
        rep.samples += part->samples;
        if (part->worst_slack < rep.worst_slack) rep.worst_slack = part->worst_slack;
        if (!part->passed) {
            if (rep.passed) rep.witness = part->name + ": " + part->witness;
            rep.passed = false;
        }
    }
    return rep;
}

// min over samples of H(x, Lp) - L H(x, p) - eta L^m |p|^m + 1/eta.
inline double coercivity_gap(const ProblemSpec& spec, double L, int samples, std::uint64_t seed = 0,
                             double p_max = kDefaultGradientCap) {
    const int d = spec.dim;
    const Hamiltonian& H = spec.hamiltonian;
    const double eta = H.coercivity_eta();
    if (!(eta > 0.0)) throw ConfigError("coercivity constant eta must be positive");
    QuasiRandom qr(static_cast<std::size_t>(d), seed);
    const auto ps = detail::gradient_samples(d, p_max);
    const double Lm = std::pow(L, H.m);
    double worst = kInf;
    for (int s = 0; s < samples; ++s) {
        const Point x = detail::to_point(qr.next(), 0, d);
        for (const Point& p : ps) {
            const Point lp{L * p[0], L * p[1]};
            const double v = H.value(x, lp, d) - L * H.value(x, p, d) -
                             eta * Lm * std::pow(norm(p, d), H.m) + 1.0 / eta;
            worst = std::min(worst, v);
        }
    }
    return worst;
}

}  // namespace nlhj
