#pragma once

// Deterministic quasi-random sampling for the assumption checkers: a Sobol
// sequence with a seed-dependent Cranley-Patterson rotation.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <boost/random/sobol.hpp>

namespace nlhj {

class QuasiRandom {
public:
    QuasiRandom(std::size_t dimension, std::uint64_t seed) : engine_(dimension), shift_(dimension) {
        std::mt19937_64 rng(seed);
        for (double& s : shift_) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        engine_.discard(dimension);  // drop the all-zero first point
    }

    std::size_t dimension() const noexcept { return shift_.size(); }

    // Next point of [0,1)^dimension.
    std::vector<double> next() {
        std::vector<double> out(shift_.size());
        const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);
        for (std::size_t k = 0; k < out.size(); ++k) {
            double v = static_cast<double>(engine_()) * scale + shift_[k];
            out[k] = v - std::floor(v);
        }
        return out;
    }

private:
    boost::random::sobol engine_;
    std::vector<double> shift_;
};

// n magnitudes spaced evenly in log scale between lo and hi inclusive.
inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = hi;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
    return out;
}

}  // namespace nlhj
