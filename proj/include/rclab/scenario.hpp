#pragma once

// Initial-data generators. All produce strictly positive, finite fields.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rclab/grid.hpp"
#include "rclab/state.hpp"

namespace rclab {

struct ScenarioSpec {
    std::string kind = "gaussian";  // constant | gaussian | random-smooth
    double background = 1.0;        // u level (constant) or floor (gaussian) or geometric mean (random-smooth)
    double amplitude = 4.0;         // gaussian peak height above background / log-amplitude for random-smooth
    std::vector<double> center;     // gaussian center; defaults to the domain midpoint
    double width = 0.15;            // gaussian e-folding radius
    double v_level = 1.0;
    double v_amplitude = 0.0;       // cosine perturbation of v (gaussian) / log-amplitude (random-smooth)
    std::size_t modes = 4;          // random-smooth: highest cosine wavenumber per axis
    std::uint64_t seed = 1;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& gen) {
    // 53 random bits -> [0, 1); independent of the standard library's distribution code
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Low-pass random cosine series normalized to max |value| = 1 over the cells.
inline std::vector<double> smooth_noise(const TensorGrid& g, std::size_t modes, std::mt19937_64& gen) {
    const std::size_t d = g.dim();
    std::size_t count = 1;
    for (std::size_t a = 0; a < d; ++a) count *= modes + 1;
    std::vector<std::vector<std::size_t>> ks;
    std::vector<double> coef;
    for (std::size_t m = 0; m < count; ++m) {
        std::vector<std::size_t> k(d);
        std::size_t rest = m, k2 = 0;
        for (std::size_t a = 0; a < d; ++a) {
            k[a] = rest % (modes + 1);
            rest /= modes + 1;
            k2 += k[a] * k[a];
        }
        const double c = (2.0 * unit_uniform(gen) - 1.0) / (1.0 + static_cast<double>(k2));
        if (k2 == 0) continue;
        ks.push_back(std::move(k));
        coef.push_back(c);
    }
    std::vector<double> out(g.size(), 0.0);
    std::vector<double> x(d);
    for (std::size_t c = 0; c < g.size(); ++c) {
        g.center_of(c, x);
        double s = 0.0;
        for (std::size_t m = 0; m < ks.size(); ++m) {
            double term = coef[m];
            for (std::size_t a = 0; a < d; ++a)
                term *= std::cos(static_cast<double>(ks[m][a]) * std::numbers::pi * x[a] / g.length(a));
            s += term;
        }
        out[c] = s;
    }
    double peak = 0.0;
    for (double y : out) peak = std::max(peak, std::abs(y));
    if (peak > 0.0)
        for (double& y : out) y /= peak;
    return out;
}

}  // namespace detail

inline InitialData make_initial_data(GridPtr grid, const ScenarioSpec& spec) {
    const TensorGrid& g = *grid;
    const std::size_t d = g.dim();
    if (spec.kind == "constant") {
        return InitialData(ScalarField(grid, spec.background), ScalarField(grid, spec.v_level));
    }
    if (spec.kind == "gaussian") {
        std::vector<double> center = spec.center;
        if (center.empty())
            for (std::size_t a = 0; a < d; ++a) center.push_back(0.5 * g.length(a));
        if (center.size() != d) throw DimensionMismatch("scenario: center must have one entry per axis");
        if (!(spec.width > 0.0)) throw InvalidArgument("scenario: width must be positive");
        auto u = ScalarField::sample(grid, [&](std::span<const double> x) {
            double r2 = 0.0;
            for (std::size_t a = 0; a < d; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
            return spec.background + spec.amplitude * std::exp(-r2 / (spec.width * spec.width));
        });
        auto v = ScalarField::sample(grid, [&](std::span<const double> x) {
            double m = 1.0;
            for (std::size_t a = 0; a < d; ++a) m *= std::cos(std::numbers::pi * x[a] / g.length(a));
            return spec.v_level + spec.v_amplitude * m;
        });
        return InitialData(std::move(u), std::move(v));
    }
    if (spec.kind == "random-smooth") {
        std::mt19937_64 gen(spec.seed);
        auto nu = detail::smooth_noise(g, spec.modes, gen);
        auto nv = detail::smooth_noise(g, spec.modes, gen);
        for (double& y : nu) y = spec.background * std::exp(spec.amplitude * y);
        for (double& y : nv) y = spec.v_level * std::exp(spec.v_amplitude * y);
        return InitialData(ScalarField(grid, std::move(nu)), ScalarField(grid, std::move(nv)));
    }
    throw InvalidArgument("scenario: unknown kind '" + spec.kind + "'");
}

}  // namespace rclab
