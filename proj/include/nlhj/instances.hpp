#pragma once

// Named builtin problem instances on the unit torus (d = 1).

#include "nlhj/model.hpp"

namespace nlhj::instances {

inline ProblemSpec assemble(DiffusionFactor df, LevyData l, Hamiltonian h, double lambda = 0.0, int dim = 1) {
    ProblemSpec s;
    s.dim = dim;
    s.lambda = lambda;
    s.diffusion = std::move(df);
    s.hamiltonian = std::move(h);
    s.levy = std::move(l);
    s.validate();
    return s;
}

inline Hamiltonian power(double m, ScalarField f, int dim = 1) {
    return Hamiltonian::power_coercive(m, ScalarField::constant(1.0), std::move(f), dim);
}

// A(x) = a(x) = 0.1 (1 + cos^2(2 pi x)).
inline DiffusionFactor mixed_diffusion() {
    return DiffusionFactor::sqrt_field(ScalarField::cos_squared(0.1, 0.1));
}

// |p|^2 - cos(2 pi x) with degenerate-free diffusion and sigma_frac = 1.
inline ProblemSpec eikonal(double lambda = 0.0) {
    return assemble(mixed_diffusion(), LevyData::fractional(1.0), power(2.0, ScalarField::cosine(0.0, 1.0)), lambda);
}

// |p|^m - cos(2 pi x), same diffusion, sigma_frac = 0.5.
inline ProblemSpec mixed(double lambda = 0.0, double m = 3.0) {
    return assemble(mixed_diffusion(), LevyData::fractional(0.5), power(m, ScalarField::cosine(0.0, 1.0)), lambda);
}

// |p|^2 - cos(2 pi x), no diffusion, no jumps.
inline ProblemSpec first_order_eikonal(double lambda = 0.0) {
    return assemble(DiffusionFactor::none(), LevyData::none(), power(2.0, ScalarField::cosine(0.0, 1.0)), lambda);
}

// |p|^2 - cos(2 pi x) with sigma_frac = 1 jumps only.
inline ProblemSpec eikonal_fractional(double lambda = 0.0) {
    return assemble(DiffusionFactor::none(), LevyData::fractional(1.0), power(2.0, ScalarField::cosine(0.0, 1.0)),
                    lambda);
}

// |p|^2 - f0 with the mixed diffusion and jumps.
inline ProblemSpec constant_source(double f0, double lambda = 0.0) {
    return assemble(mixed_diffusion(), LevyData::fractional(1.0), power(2.0, ScalarField::constant(f0)), lambda);
}

// sigma = 0 and a single atom at 1/4.
inline ProblemSpec atomic_degenerate(double lambda = 0.0) {
    return assemble(DiffusionFactor::none(), LevyData::atomic({Atom{{0.25, 0.0}, 1.0}}),
                    power(2.0, ScalarField::cosine(0.0, 1.0)), lambda);
}

}  // namespace nlhj::instances
