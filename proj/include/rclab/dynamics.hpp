#pragma once

// Time integration of the regularized system
//   u_t = Lap u - div(u F'_eps(u) grad v),   v_t = Lap v - F_eps(u) v
// with zero-flux boundaries.
//
// IMEX step (default):
//   rhs  = u - dt * div J,  J = [u F'_eps(u)]_upwind * D v on interior faces
//   (I - dt Lap) u_new = rhs                         (conjugate gradient)
//   (I - dt Lap) v*    = v,   v_new = v* / (1 + dt F_eps(u_new))
// Mass of u is conserved because div J and Lap telescope, and CG started from rhs only
// adds zero-sum Krylov directions. v obeys the maximum principle because
// (I - dt Lap)^-1 is a nonnegative averaging operator and the consumption factor is <= 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rclab/diagnostics.hpp"
#include "rclab/grid.hpp"
#include "rclab/regularization.hpp"
#include "rclab/state.hpp"
#include "rclab/trajectory.hpp"

namespace rclab {

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Solves (I - dt Lap) x = b by conjugate gradients, starting from x = b.
/// Returns the iteration count.
inline std::size_t solve_shifted_laplacian(const TensorGrid& g, double dt, std::span<const double> b,
                                           std::span<double> x, double tol, std::size_t max_iter) {
    const std::size_t n = b.size();
    std::copy(b.begin(), b.end(), x.begin());
    std::vector<double> r(n), p(n), ap(n);
    apply_laplacian(g, x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = dt * ap[i];  // b - (x - dt Lap x) with x = b
    const double b_norm = std::sqrt(dot(b, b));
    const double target = tol * (b_norm > 0.0 ? b_norm : 1.0);
    double rr = dot(r, r);
    if (std::sqrt(rr) <= target) return 0;
    p = r;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        apply_laplacian(g, p, ap);
        for (std::size_t i = 0; i < n; ++i) ap[i] = p[i] - dt * ap[i];
        const double alpha = rr / dot(p, ap);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        if (!std::isfinite(rr_new)) throw SolverFailure("conjugate gradient: non-finite residual", it, rr_new);
        if (std::sqrt(rr_new) <= target) return it;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw SolverFailure("conjugate gradient did not converge", max_iter, std::sqrt(rr) / (b_norm > 0 ? b_norm : 1.0));
}

inline void require_state(const SolverState& s) {
    detail::require_same_grid(s.u, s.v, "step");
    if (!s.u.all_finite() || !s.v.all_finite()) throw NumericalBlowUp("step: non-finite state", s.time);
}

inline void check_result(const ScalarField& u, const ScalarField& v, double time, ClampPolicy policy) {
    if (!u.all_finite() || !v.all_finite()) throw NumericalBlowUp("step produced non-finite values", time);
    if (policy == ClampPolicy::reject) {
        const double mu = u.min();
        if (mu < 0.0) throw PositivityViolation("step produced negative u (dt too large)", time, mu);
        const double mv = v.min();
        if (mv < 0.0) throw PositivityViolation("step produced negative v", time, mv);
    }
}

}  // namespace detail

/// Chemotactic flux u F'_eps(u) D v on interior faces with the coefficient taken from the
/// upwind cell of D v.
inline FaceField chemotactic_flux_upwind(const ScalarField& u, const ScalarField& v, const Regularization& reg) {
    const TensorGrid& g = u.grid();
    return make_face_field(u.grid_ptr(), [&](std::size_t a, std::size_t lo, std::size_t hi) {
        const double dv = (v[hi] - v[lo]) / g.spacing(a);
        const double coef = dv > 0.0 ? reg.drift(u[lo]) : reg.drift(u[hi]);
        return coef * dv;
    });
}

/// Largest dt for which the explicit upwind flux keeps u nonnegative:
/// dt * sum_a 2 max|D_a v| / h_a <= 1. Infinite for a flat v.
inline double advective_dt_limit(const ScalarField& v) {
    const TensorGrid& g = v.grid();
    double rate = 0.0;
    for (std::size_t a = 0; a < g.dim(); ++a) {
        double m = 0.0;
        detail::for_each_line(g, a, [&](std::size_t first, std::size_t s, std::size_t n) {
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const std::size_t c = first + i * s;
                m = std::max(m, std::abs(v[c + s] - v[c]) / g.spacing(a));
            }
        });
        rate += 2.0 * m / g.spacing(a);
    }
    return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

/// Explicit diffusion limit dt <= 1 / (2 sum_a 1/h_a^2).
inline double diffusive_dt_limit(const TensorGrid& g) {
    double s = 0.0;
    for (std::size_t a = 0; a < g.dim(); ++a) s += 1.0 / (g.spacing(a) * g.spacing(a));
    return 0.5 / s;
}

inline SolverState step(const SolverState& state, const SolverConfig& cfg, double dt) {
    detail::require_state(state);
    const TensorGrid& g = state.grid();
    const std::size_t n = g.size();
    const Regularization& reg = state.reg;

    const ScalarField div = divergence_of_flux(chemotactic_flux_upwind(state.u, state.v, reg));
    std::vector<double> u_new(n), v_new(n);

    if (cfg.scheme == Scheme::imex) {
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = state.u[i] - dt * div[i];
        detail::solve_shifted_laplacian(g, dt, rhs, u_new, cfg.cg_tolerance, cfg.cg_max_iterations);
        detail::solve_shifted_laplacian(g, dt, state.v.values(), v_new, cfg.cg_tolerance, cfg.cg_max_iterations);
        for (std::size_t i = 0; i < n; ++i) {
            if (u_new[i] < 0.0 && cfg.clamp_policy == ClampPolicy::reject) {
                throw PositivityViolation("step produced negative u (dt too large)", state.time + dt, u_new[i]);
            }
            // F_eps is only defined on [0, inf); with clamp_policy none the consumption
            // rate of a negative density is taken as 0.
            const double rate = u_new[i] > 0.0 ? reg.f(u_new[i]) : 0.0;
            v_new[i] = v_new[i] / (1.0 + dt * rate);
        }
    } else {
        const double limit = cfg.cfl_safety * std::min(diffusive_dt_limit(g), advective_dt_limit(state.v));
        if (dt > limit) {
            throw InvalidArgument("step: dt = " + std::to_string(dt) + " exceeds the explicit stability limit " +
                                  std::to_string(limit));
        }
        std::vector<double> lap_u(n), lap_v(n);
        detail::apply_laplacian(g, state.u.values(), lap_u);
        detail::apply_laplacian(g, state.v.values(), lap_v);
        for (std::size_t i = 0; i < n; ++i) {
            u_new[i] = state.u[i] + dt * (lap_u[i] - div[i]);
            v_new[i] = state.v[i] + dt * (lap_v[i] - reg.f(state.u[i]) * state.v[i]);
        }
    }

    SolverState next{state.time + dt, ScalarField(state.u.grid_ptr(), std::move(u_new)),
                     ScalarField(state.v.grid_ptr(), std::move(v_new)), reg, state.step_index + 1};
    detail::check_result(next.u, next.v, next.time, cfg.clamp_policy);
    return next;
}

inline SolverState step(const SolverState& state, const SolverConfig& cfg) { return step(state, cfg, cfg.dt); }

/// What `run` records and calls back.
struct DiagnosticsSinks {
    std::size_t snapshot_cadence = 1;  // keep every k-th step (first and last always kept)
    bool records = true;               // evaluate DiagnosticsRecord at every kept snapshot
    std::function<void(const SolverState&)> on_step;  // called after the initial state and every step
};

/// Number of steps to reach t_end and the duration of the last one.
struct StepPlan {
    std::size_t steps = 0;
    double last_dt = 0.0;
};

inline StepPlan plan_steps(double dt, double t_end) {
    const double ratio = t_end / dt;
    auto full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    const double rest = t_end - static_cast<double>(full) * dt;
    if (rest > 1e-9 * dt) return {full + 1, rest};
    return {full, dt};
}

inline TrajectoryStore run(const InitialData& init, const Regularization& reg, const SolverConfig& cfg,
                           const DiagnosticsSinks& sinks = {}) {
    cfg.validate();
    if (sinks.snapshot_cadence == 0) throw InvalidArgument("run: snapshot cadence must be positive");
    TrajectoryStore traj(init.u0().grid_ptr(), reg.epsilon());
    SolverState state = SolverState::initial(init, reg);

    auto keep = [&](const SolverState& s) {
        std::optional<DiagnosticsRecord> rec;
        if (sinks.records) rec = compute_record(s);
        traj.add(Frame{s.time, s.step_index, s.u, s.v}, rec);
    };

    keep(state);
    if (sinks.on_step) sinks.on_step(state);
    const StepPlan plan = plan_steps(cfg.dt, cfg.t_end);
    for (std::size_t k = 1; k <= plan.steps; ++k) {
        const double dt = k == plan.steps ? plan.last_dt : cfg.dt;
        state = step(state, cfg, dt);
        // times are re-anchored to k*dt so long runs do not accumulate drift
        state.time = k == plan.steps ? cfg.t_end : static_cast<double>(k) * cfg.dt;
        if (sinks.on_step) sinks.on_step(state);
        if (k % sinks.snapshot_cadence == 0 || k == plan.steps) keep(state);
    }
    return traj;
}

}  // namespace rclab
