#pragma once

// Functionals of the entropy-energy estimates, evaluated by midpoint quadrature on
// cell-centered differences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rclab/grid.hpp"
#include "rclab/regularization.hpp"
#include "rclab/state.hpp"

namespace rclab {

inline constexpr double kFloorU = 1e-30;
inline constexpr double kFloorV = 1e-30;

struct DiagnosticsRecord {
    std::size_t step = 0;
    double time = 0.0;
    double mass_u = 0.0;
    double min_u = 0.0;
    double max_v = 0.0;
    double entropy = 0.0;       // int u ln u
    double grad_sqrt_v = 0.0;   // 2 int |grad sqrt v|^2
    double energy = 0.0;        // entropy + grad_sqrt_v
    double fisher = 0.0;        // int |grad u|^2 / u
    double hessian_logv = 0.0;  // int v |D^2 ln v|^2
    double cross = 0.0;         // 1/2 int F(u) |grad v|^2 / v
    double u_logu_abs = 0.0;    // int u |ln u|
    double grad_v_sq = 0.0;     // int |grad v|^2
    double feps_gradv = 0.0;    // int F(u) |grad v|^2
    double u_pow = 0.0;         // int u^((n+2)/n)

    /// Dissipation rate of the energy: fisher + hessian_logv + cross.
    double dissipation() const { return fisher + hessian_logv + cross; }
};

/// Column order of the diagnostics CSV.
inline constexpr std::array<const char*, 15> kDiagnosticsColumns = {
    "step",   "time",         "mass_u", "min_u",      "max_v",     "entropy",    "grad_sqrt_v", "energy",
    "fisher", "hessian_logv", "cross",  "u_logu_abs", "grad_v_sq", "feps_gradv", "u_pow"};

inline std::array<double, 15> record_values(const DiagnosticsRecord& r) {
    return {static_cast<double>(r.step), r.time, r.mass_u, r.min_u, r.max_v, r.entropy, r.grad_sqrt_v, r.energy,
            r.fisher, r.hessian_logv, r.cross, r.u_logu_abs, r.grad_v_sq, r.feps_gradv, r.u_pow};
}

inline DiagnosticsRecord record_from_values(std::span<const double> x) {
    if (x.size() != kDiagnosticsColumns.size()) throw DimensionMismatch("diagnostics row: wrong column count");
    DiagnosticsRecord r;
    r.step = static_cast<std::size_t>(x[0]);
    r.time = x[1];
    r.mass_u = x[2];
    r.min_u = x[3];
    r.max_v = x[4];
    r.entropy = x[5];
    r.grad_sqrt_v = x[6];
    r.energy = x[7];
    r.fisher = x[8];
    r.hessian_logv = x[9];
    r.cross = x[10];
    r.u_logu_abs = x[11];
    r.grad_v_sq = x[12];
    r.feps_gradv = x[13];
    r.u_pow = x[14];
    return r;
}

namespace detail {

inline ScalarField map(const ScalarField& f, double (*fn)(double)) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(f[i]);
    return ScalarField(f.grid_ptr(), std::move(out));
}

/// Per-cell |grad f|^2 from centered gradients.
inline std::vector<double> grad_norm_sq(const std::vector<ScalarField>& grad) {
    std::vector<double> out(grad.front().size(), 0.0);
    for (const auto& g : grad)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i] * g[i];
    return out;
}

inline std::vector<double> grad_dot(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b) {
    std::vector<double> out(a.front().size(), 0.0);
    for (std::size_t d = 0; d < a.size(); ++d)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[d][i] * b[d][i];
    return out;
}

inline double integrate_values(const TensorGrid& g, std::span<const double> values) {
    return g.cell_volume() * compensated_sum(values);
}

/// Per-cell squared Frobenius norm of the discrete Hessian of w: central second differences
/// on the diagonal, centered differences of centered differences off the diagonal.
inline std::vector<double> hessian_frobenius_sq(const ScalarField& w) {
    const TensorGrid& g = w.grid();
    std::vector<double> out(g.size(), 0.0);
    const auto in = w.values();
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
        for_each_line(g, a, [&](std::size_t first, std::size_t s, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = first + i * s;
                const double left = i > 0 ? in[c - s] : in[c];
                const double right = i + 1 < n ? in[c + s] : in[c];
                const double d2 = (right - 2.0 * in[c] + left) * inv_h2;
                out[c] += d2 * d2;
            }
        });
    }
    if (g.dim() > 1) {
        const auto grad = gradient_centered(w);
        for (std::size_t a = 0; a < g.dim(); ++a) {
            const auto second = gradient_centered(grad[a]);
            for (std::size_t b = a + 1; b < g.dim(); ++b)
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += 2.0 * second[b][i] * second[b][i];
        }
    }
    return out;
}

/// Trapezoidal rule over (possibly nonuniform) sample times.
inline double trapezoid(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw DimensionMismatch("trapezoid: size mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) sum += 0.5 * (t[k + 1] - t[k]) * (y[k] + y[k + 1]);
    return sum;
}

}  // namespace detail

inline DiagnosticsRecord compute_record(const SolverState& state) {
    const ScalarField& u = state.u;
    const ScalarField& v = state.v;
    detail::require_same_grid(u, v, "compute_record");
    detail::require_finite(u, "compute_record");
    detail::require_finite(v, "compute_record");
    const TensorGrid& g = u.grid();
    const double min_u = u.min();
    const double min_v = v.min();
    if (!(min_u > kFloorU)) throw FloorViolation("compute_record: min u = " + std::to_string(min_u) + " below floor");
    if (!(min_v > kFloorV)) throw FloorViolation("compute_record: min v = " + std::to_string(min_v) + " below floor");

    const std::size_t n = g.size();
    const double dim = static_cast<double>(g.dim());
    const double exponent = (dim + 2.0) / dim;

    const auto grad_u = gradient_centered(u);
    const auto grad_v = gradient_centered(v);
    const auto grad_sqrt_v = gradient_centered(detail::map(v, [](double x) { return std::sqrt(x); }));
    const auto gu2 = detail::grad_norm_sq(grad_u);
    const auto gv2 = detail::grad_norm_sq(grad_v);
    const auto gsv2 = detail::grad_norm_sq(grad_sqrt_v);
    const auto hess = detail::hessian_frobenius_sq(detail::map(v, [](double x) { return std::log(x); }));

    std::vector<double> entropy(n), fisher(n), hessian(n), cross(n), ulogu(n), feps(n), upow(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u[i];
        const double vi = v[i];
        const double fu = state.reg.f(ui);
        const double lu = std::log(ui);
        entropy[i] = ui * lu;
        ulogu[i] = ui * std::abs(lu);
        fisher[i] = gu2[i] / ui;
        hessian[i] = vi * hess[i];
        cross[i] = 0.5 * fu * gv2[i] / vi;
        feps[i] = fu * gv2[i];
        upow[i] = std::pow(ui, exponent);
    }

    DiagnosticsRecord r;
    r.step = state.step_index;
    r.time = state.time;
    r.mass_u = integrate(u);
    r.min_u = min_u;
    r.max_v = v.max();
    r.entropy = detail::integrate_values(g, entropy);
    r.grad_sqrt_v = 2.0 * detail::integrate_values(g, gsv2);
    r.energy = r.entropy + r.grad_sqrt_v;
    r.fisher = detail::integrate_values(g, fisher);
    r.hessian_logv = detail::integrate_values(g, hessian);
    r.cross = detail::integrate_values(g, cross);
    r.u_logu_abs = detail::integrate_values(g, ulogu);
    r.grad_v_sq = detail::integrate_values(g, gv2);
    r.feps_gradv = detail::integrate_values(g, feps);
    r.u_pow = detail::integrate_values(g, upow);
    return r;
}

/// 1/2 int |grad v|^2 / v, the chain-rule twin of grad_sqrt_v.
inline double grad_sqrt_v_via_quotient(const ScalarField& v) {
    const auto gv2 = detail::grad_norm_sq(gradient_centered(v));
    std::vector<double> q(v.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.5 * gv2[i] / v[i];
    return detail::integrate_values(v.grid(), q);
}

struct InequalityReport {
    bool passed = true;
    double worst = -std::numeric_limits<double>::infinity();  // max over pairs of the left side
    double worst_time = 0.0;
    double worst_violation = 0.0;                              // max(0, worst)
    std::size_t violations = 0;                                // pairs with left side > slack
    std::vector<double> left_sides;
};

/// For consecutive records k, k+1:
///   energy(t_{k+1}) - energy(t_k) + dt * (fisher + hessian_logv + cross)(t_{k+1}) <= slack.
/// dt > 0 fixes the step; dt == 0 takes |t_{k+1} - t_k| from the records.
inline InequalityReport check_energy_inequality(std::span<const DiagnosticsRecord> records, double dt, double slack) {
    if (records.size() < 2) throw InvalidArgument("check_energy_inequality: need at least two records");
    if (!(dt >= 0.0)) throw InvalidArgument("check_energy_inequality: dt must be nonnegative");
    InequalityReport rep;
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
        const auto& a = records[k];
        const auto& b = records[k + 1];
        const double h = dt > 0.0 ? dt : std::abs(b.time - a.time);
        const double lhs = b.energy - a.energy + h * b.dissipation();
        rep.left_sides.push_back(lhs);
        if (lhs > rep.worst) {
            rep.worst = lhs;
            rep.worst_time = b.time;
        }
        if (!(lhs <= slack)) {
            ++rep.violations;
            rep.passed = false;
        }
    }
    rep.worst_violation = std::max(0.0, rep.worst);
    return rep;
}

struct BudgetReport {
    double horizon = 0.0;
    double sup_u_logu_abs = 0.0;
    double sup_grad_v_sq = 0.0;
    double int_fisher = 0.0;
    double int_feps_gradv = 0.0;
    double int_u_pow = 0.0;
    bool finite = true;

    std::array<double, 5> values() const {
        return {sup_u_logu_abs, sup_grad_v_sq, int_fisher, int_feps_gradv, int_u_pow};
    }
};

inline constexpr std::array<const char*, 5> kBudgetNames = {"sup_u_logu_abs", "sup_grad_v_sq", "int_fisher",
                                                            "int_feps_gradv", "int_u_pow"};

/// Time-uniform and time-integrated bounds over records with time <= horizon.
inline BudgetReport check_budgets(std::span<const DiagnosticsRecord> records, double horizon) {
    if (records.empty()) throw InvalidArgument("check_budgets: no records");
    BudgetReport rep;
    rep.horizon = horizon;
    std::vector<double> t, fisher, feps, upow;
    for (const auto& r : records) {
        if (r.time > horizon) break;
        rep.sup_u_logu_abs = std::max(rep.sup_u_logu_abs, r.u_logu_abs);
        rep.sup_grad_v_sq = std::max(rep.sup_grad_v_sq, r.grad_v_sq);
        t.push_back(r.time);
        fisher.push_back(r.fisher);
        feps.push_back(r.feps_gradv);
        upow.push_back(r.u_pow);
    }
    rep.int_fisher = detail::trapezoid(t, fisher);
    rep.int_feps_gradv = detail::trapezoid(t, feps);
    rep.int_u_pow = detail::trapezoid(t, upow);
    for (double x : rep.values()) rep.finite = rep.finite && std::isfinite(x);
    return rep;
}

inline BudgetReport check_budgets(std::span<const DiagnosticsRecord> records) {
    if (records.empty()) throw InvalidArgument("check_budgets: no records");
    return check_budgets(records, records.back().time);
}

struct LadderStability {
    std::array<double, 5> base_max{};
    std::array<double, 5> extended_max{};
    std::array<double, 5> relative_change{};
    double worst_change = 0.0;
};

/// Max of each budget over a ladder, and its relative change once one more ladder point is added.
inline LadderStability budget_ladder_stability(std::span<const BudgetReport> base, const BudgetReport& extra) {
    if (base.empty()) throw InvalidArgument("budget_ladder_stability: empty ladder");
    LadderStability s;
    for (std::size_t j = 0; j < 5; ++j) {
        double m = 0.0;
        for (const auto& b : base) m = std::max(m, b.values()[j]);
        s.base_max[j] = m;
        s.extended_max[j] = std::max(m, extra.values()[j]);
        s.relative_change[j] = m > 0.0 ? (s.extended_max[j] - m) / m : (s.extended_max[j] > 0.0 ? 1.0 : 0.0);
        s.worst_change = std::max(s.worst_change, s.relative_change[j]);
    }
    return s;
}

}  // namespace rclab
