#pragma once

// Brute-force reference integrator: forward Euler with centered (arithmetic-mean) face
// coefficients for the chemotactic flux. Written with its own stencil loops so it shares
// no discretization code with the IMEX solver it is compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rclab/diagnostics.hpp"
#include "rclab/error.hpp"
#include "rclab/regularization.hpp"
#include "rclab/state.hpp"
#include "rclab/trajectory.hpp"

namespace rclab {

inline constexpr std::size_t kOracleMaxCellsPerAxis = 32;
inline constexpr std::size_t kOracleMaxDim = 2;

namespace detail {

struct OracleGeometry {
    std::size_t dim;
    std::size_t nx, ny;  // ny == 1 in 1D
    double hx, hy;
};

inline OracleGeometry oracle_geometry(const TensorGrid& g) {
    if (g.dim() > kOracleMaxDim) throw InvalidArgument("oracle_solve: at most 2 dimensions");
    for (std::size_t a = 0; a < g.dim(); ++a) {
        if (g.cells(a) > kOracleMaxCellsPerAxis) throw InvalidArgument("oracle_solve: at most 32 cells per axis");
    }
    OracleGeometry geo{g.dim(), g.cells(0), g.dim() == 2 ? g.cells(1) : 1, g.spacing(0),
                       g.dim() == 2 ? g.spacing(1) : 1.0};
    return geo;
}

/// max |centered grad v| over cells, with mirrored ghosts.
inline double oracle_max_grad(const OracleGeometry& geo, const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < geo.nx; ++i)
        for (std::size_t j = 0; j < geo.ny; ++j) {
            auto at = [&](std::size_t a, std::size_t b) { return v[a * geo.ny + b]; };
            const std::size_t im = i == 0 ? 0 : i - 1, ip = i + 1 == geo.nx ? i : i + 1;
            double gx = (at(ip, j) - at(im, j)) / (2 * geo.hx);
            double gy = 0.0;
            if (geo.dim == 2) {
                const std::size_t jm = j == 0 ? 0 : j - 1, jp = j + 1 == geo.ny ? j : j + 1;
                gy = (at(i, jp) - at(i, jm)) / (2 * geo.hy);
            }
            m = std::max(m, std::sqrt(gx * gx + gy * gy));
        }
    return m;
}

}  // namespace detail

/// Largest admissible oracle step: h_min^2 / (2 dim (1 + max|grad v|)).
inline double oracle_dt_limit(const ScalarField& v) {
    const auto geo = detail::oracle_geometry(v.grid());
    const double h = std::min(geo.hx, geo.dim == 2 ? geo.hy : geo.hx);
    return h * h / (2.0 * static_cast<double>(geo.dim) * (1.0 + detail::oracle_max_grad(geo, v.storage())));
}

inline TrajectoryStore oracle_solve(const InitialData& init, const Regularization& reg, double t_end, double dt_fine,
                                    std::size_t cadence = 1, double cfl_safety = 1.0, bool records = false) {
    const TensorGrid& g = init.grid();
    const auto geo = detail::oracle_geometry(g);
    if (!(dt_fine > 0.0) || !(t_end >= dt_fine)) throw InvalidArgument("oracle_solve: need 0 < dt_fine <= t_end");
    if (cadence == 0) throw InvalidArgument("oracle_solve: cadence must be positive");

    const std::size_t nx = geo.nx, ny = geo.ny;
    std::vector<double> u(init.u0().storage()), v(init.v0().storage());
    std::vector<double> un(u.size()), vn(v.size());
    TrajectoryStore traj(init.u0().grid_ptr(), reg.epsilon());
    auto keep = [&](double t, std::size_t k) {
        ScalarField fu(init.u0().grid_ptr(), u), fv(init.v0().grid_ptr(), v);
        std::optional<DiagnosticsRecord> rec;
        if (records) rec = compute_record(SolverState{t, fu, fv, reg, k});
        traj.add(Frame{t, k, std::move(fu), std::move(fv)}, rec);
    };
    keep(0.0, 0);

    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt_fine));
    if (std::abs(static_cast<double>(steps) * dt_fine - t_end) > 1e-9 * t_end) {
        throw InvalidArgument("oracle_solve: t_end must be an integer multiple of dt_fine");
    }
    auto idx = [ny](std::size_t i, std::size_t j) { return i * ny + j; };
    const double hmin = std::min(geo.hx, geo.dim == 2 ? geo.hy : geo.hx);

    for (std::size_t k = 1; k <= steps; ++k) {
        const double limit =
            cfl_safety * hmin * hmin / (2.0 * static_cast<double>(geo.dim) * (1.0 + detail::oracle_max_grad(geo, v)));
        if (dt_fine > limit) throw InvalidArgument("oracle_solve: dt_fine exceeds the stability limit");
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) {
                const std::size_t c = idx(i, j);
                double lap_u = 0.0, lap_v = 0.0, divj = 0.0;
                // x faces
                {
                    const double h = geo.hx;
                    if (i + 1 < nx) {
                        const std::size_t e = idx(i + 1, j);
                        lap_u += (u[e] - u[c]) / (h * h);
                        lap_v += (v[e] - v[c]) / (h * h);
                        divj += 0.5 * (reg.drift(u[c]) + reg.drift(u[e])) * (v[e] - v[c]) / (h * h);
                    }
                    if (i > 0) {
                        const std::size_t w = idx(i - 1, j);
                        lap_u -= (u[c] - u[w]) / (h * h);
                        lap_v -= (v[c] - v[w]) / (h * h);
                        divj -= 0.5 * (reg.drift(u[c]) + reg.drift(u[w])) * (v[c] - v[w]) / (h * h);
                    }
                }
                if (geo.dim == 2) {
                    const double h = geo.hy;
                    if (j + 1 < ny) {
                        const std::size_t nn = idx(i, j + 1);
                        lap_u += (u[nn] - u[c]) / (h * h);
                        lap_v += (v[nn] - v[c]) / (h * h);
                        divj += 0.5 * (reg.drift(u[c]) + reg.drift(u[nn])) * (v[nn] - v[c]) / (h * h);
                    }
                    if (j > 0) {
                        const std::size_t s = idx(i, j - 1);
                        lap_u -= (u[c] - u[s]) / (h * h);
                        lap_v -= (v[c] - v[s]) / (h * h);
                        divj -= 0.5 * (reg.drift(u[c]) + reg.drift(u[s])) * (v[c] - v[s]) / (h * h);
                    }
                }
                un[c] = u[c] + dt_fine * (lap_u - divj);
                vn[c] = v[c] + dt_fine * (lap_v - reg.f(u[c]) * v[c]);
            }
        }
        u.swap(un);
        v.swap(vn);
        const double t = static_cast<double>(k) * dt_fine;
        for (std::size_t c = 0; c < u.size(); ++c) {
            if (!std::isfinite(u[c]) || !std::isfinite(v[c])) throw NumericalBlowUp("oracle: non-finite values", t);
            if (u[c] < 0.0) throw PositivityViolation("oracle: negative u", t, u[c]);
            if (v[c] < 0.0) throw PositivityViolation("oracle: negative v", t, v[c]);
        }
        if (k % cadence == 0 || k == steps) keep(t, k);
    }
    return traj;
}

}  // namespace rclab
