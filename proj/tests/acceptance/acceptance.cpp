// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rclab/experiments.hpp"

using namespace rclab;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> log_spaced(std::size_t count, double lo, double hi) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / (count - 1.0));
    return out;
}

/// Base study plan: 32^2, off-center Gaussian with a cosine-perturbed signal, T = 0.05.
StudyPlan base_plan(StudyKind kind) {
    StudyPlan p;
    p.kind = kind;
    p.grid.cells = {32, 32};
    p.scenario.center = {0.35, 0.42};
    p.scenario.v_amplitude = 0.5;
    p.solver.t_end = 0.05;
    p.solver.dt = 0.25 / (32.0 * 32.0);
    return p;
}

std::string flags_text(const StudyVerdict& v) {
    std::string s;
    for (const auto& f : v.flags) s += f.name + "=" + (f.value ? "1" : "0") + " ";
    for (const auto& n : v.notes) s += "note: " + n + " ";
    return s;
}

std::string orders_text(const ObservedOrder& o) {
    std::string s;
    for (double x : o.orders) s += (s.empty() ? "" : ", ") + sci(x);
    return "[" + s + "]";
}

// 64^2, 2000 IMEX steps
struct MassRun {
    double worst_mass = 0.0;
    double worst_vmax_excess = -std::numeric_limits<double>::infinity();
    double min_v = std::numeric_limits<double>::infinity();
    double seconds = 0.0;
    std::size_t steps = 0;
    TrajectoryStore traj{nullptr, 0.5};
    std::string error;
};

MassRun mass_run() {
    MassRun r;
    try {
        const auto g = make_grid(TensorGrid::uniform(2, 64));
        const auto init = make_initial_data(g, ScenarioSpec{});
        SolverConfig cfg;
        cfg.dt = 1e-4;
        cfg.t_end = 2000 * cfg.dt;
        const double m0 = integrate(init.u0());
        const double vmax0 = init.v0().max();
        DiagnosticsSinks sinks;
        sinks.snapshot_cadence = 100;
        sinks.on_step = [&](const SolverState& s) {
            r.worst_mass = std::max(r.worst_mass, std::abs(integrate(s.u) - m0) / m0);
            r.worst_vmax_excess = std::max(r.worst_vmax_excess, s.v.max() - vmax0);
            r.min_v = std::min(r.min_v, s.v.min());
            ++r.steps;
        };
        const auto t0 = std::chrono::steady_clock::now();
        r.traj = run(init, Regularization(0.5), cfg, sinks);
        r.seconds = seconds_since(t0);
        r.steps -= 1;
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

Outcome mass_conservation(const MassRun& r) {
    if (!r.error.empty()) return {false, r.error};
    const bool ok = r.steps == 2000 && r.worst_mass <= 1e-12 && r.seconds < 30.0;
    return {ok, std::to_string(r.steps) + " steps on 64^2, max relative mass drift " + sci(r.worst_mass) +
                    " (<= 1e-12), " + sci(r.seconds) + " s (< 30 s)"};
}

Outcome maximum_principle(const MassRun& r) {
    if (!r.error.empty()) return {false, r.error};
    const bool ok = r.worst_vmax_excess <= 1e-10 && r.min_v >= 0.0;
    return {ok, "max v - max v0 = " + sci(r.worst_vmax_excess) + " (<= 1e-10), min v = " + sci(r.min_v)};
}

Outcome f_eps_bounds() {
    const auto samples = log_spaced(100000, 1e-12, 1e12);
    std::size_t violations = 0, checked = 0;
    for (double eps : {1.0, 0.5, 0.125, 1e-3}) {
        const Regularization reg(eps);
        for (double s : samples) {
            ++checked;
            const double fp = reg.f_prime(s);
            const bool ok = fp >= 0.0 && fp <= 1.0 && reg.f(s) <= s && reg.drift(s) <= 1.0 / eps;
            violations += ok ? 0 : 1;
        }
    }
    return {violations == 0, std::to_string(checked) + " (eps, s) samples, " + std::to_string(violations) + " violations"};
}

Outcome truncation_axioms() {
    const auto fam = TruncationFamily::dyadic(CutoffProfile::smooth(), 1, 10);
    const auto rep = verify_truncation_axioms(fam, default_truncation_samples(fam), {1.0, 10.0, 100.0});
    std::string s;
    for (const auto& c : rep.checks) s += c.axiom + (c.passed ? "+ " : "- ");
    return {rep.all_passed() && fam.levels().size() == 10 && fam.levels().back() == 1024.0,
            "levels 2..1024: " + s + "K1=" + sci(fam.k1()) + " K2=" + sci(fam.k2())};
}

Outcome energy_inequality(const StudyVerdict& ref) {
    if (!ref.notes.empty()) return {false, flags_text(ref)};
    const auto ev = ref.column("energy_violation");
    const auto e0 = ref.column("energy0");
    const auto lhs = ref.column("energy_worst_lhs");
    const auto& ord = ref.order("energy_violation");
    const bool ok = ref.flag("energy_violation_bound").value && ref.flag("energy_violation_order").value;
    return {ok, "ladder 16,32,64 with dt = h^2/4: violations " + sci(ev[0]) + ", " + sci(ev[1]) + ", " + sci(ev[2]) +
                    " (finest <= 1e-6*|E0| = " + sci(1e-6 * std::abs(e0.back())) + "), worst left sides " + sci(lhs[0]) +
                    ", " + sci(lhs[1]) + ", " + sci(lhs[2]) + ", orders " + orders_text(ord)};
}

Outcome oracle() {
    StudyPlan p;
    p.kind = StudyKind::oracle;
    p.grid.cells = {16, 16};
    p.scenario.width = 0.2;
    p.solver.t_end = 0.1;
    p.solver.dt = 5e-4;
    p.ladder = {5e-4, 2.5e-4, 1.25e-4};
    p.oracle_substeps = 64;
    const auto v = oracle_comparison(p);
    if (!v.notes.empty()) return {false, flags_text(v)};
    const auto g = v.column("gap_u");
    return {v.passed, "16^2, T = 0.1, dt_oracle = dt/64: gaps " + sci(g[0]) + ", " + sci(g[1]) + ", " + sci(g[2]) +
                          " (<= 1e-3), orders " + orders_text(v.order("gap_u"))};
}

Outcome defect_decay(const StudyVerdict& trunc, const MassRun& mass) {
    if (!trunc.notes.empty()) return {false, flags_text(trunc)};
    std::string detail = "32^2 ladder 2..1024: " + flags_text(trunc) +
                         "nu err " + sci(trunc.summary_value("nu_relative_error")) + ", gamma err " +
                         sci(trunc.summary_value("gamma_relative_error")) + "; ";
    bool ok = trunc.passed;
    if (!mass.error.empty()) return {false, mass.error};
    // the 64^2 run as a second completed run
    const auto fam = TruncationFamily::dyadic(CutoffProfile::smooth(), 1, 10);
    const auto rep = defect_measures(mass.traj, fam);
    const auto decay = assess_defect_decay(rep);
    const auto bud = check_budgets(mass.traj.records());
    const double nu_err = std::abs(rep.nu_sum() - 0.25 * bud.int_fisher) / (0.25 * bud.int_fisher);
    const double g_err = std::abs(rep.gamma_sum() - bud.int_feps_gradv) / bud.int_feps_gradv;
    ok = ok && decay.passed() && nu_err <= kPartitionTolerance && g_err <= kPartitionTolerance;
    detail += "64^2 run: decay " + std::string(decay.passed() ? "ok" : "violated") + ", nu err " + sci(nu_err) +
              ", gamma err " + sci(g_err);
    return {ok, detail};
}

Outcome renormalized_residual_criterion(const StudyVerdict& ref, const StudyVerdict& eps) {
    if (!ref.notes.empty()) return {false, flags_text(ref)};
    if (!eps.notes.empty()) return {false, flags_text(eps)};
    const auto& ord = ref.order("renormalized_discretization");
    const auto res = eps.column("renormalized_residual");
    std::string r;
    for (double x : res) r += (r.empty() ? "" : ", ") + sci(x);
    const bool ok = ref.flag("renormalized_discretization_order").value &&
                    eps.flag("renormalized_residual_decreasing").value;
    return {ok, "xi = phi_E, E = " + sci(ref.summary_value("level")) + ": refinement orders " + orders_text(ord) +
                    " (>= 1); eps ladder residuals " + r + " (strictly decreasing)"};
}

Outcome epsilon_consistency(const StudyVerdict& eps) {
    if (!eps.notes.empty()) return {false, flags_text(eps)};
    const auto d = eps.column("l1_u_to_previous");
    std::string s;
    for (std::size_t i = 1; i < d.size(); ++i) s += (s.empty() ? "" : ", ") + sci(d[i]);
    return {eps.flag("l1_u_decreasing").value && d.size() == 4,
            "32^2, eps 1, 1/2, 1/4, 1/8: pairwise L1 distances of u " + s};
}

Outcome smoke_4d() {
    try {
        const auto g = make_grid(TensorGrid::uniform(4, 8));
        ScenarioSpec sc;
        sc.center = {0.35, 0.42, 0.5, 0.6};
        sc.width = 0.3;
        sc.v_amplitude = 0.5;
        SolverConfig cfg;
        cfg.dt = 1e-3;
        cfg.t_end = 0.05;
        const auto init = make_initial_data(g, sc);
        const double m0 = integrate(init.u0());
        const double vmax0 = init.v0().max();
        double drift = 0.0, excess = -1.0, vmin = 1.0;
        std::vector<DiagnosticsRecord> records;
        DiagnosticsSinks sinks;
        sinks.snapshot_cadence = 10;
        sinks.on_step = [&](const SolverState& s) {
            drift = std::max(drift, std::abs(integrate(s.u) - m0) / m0);
            excess = std::max(excess, s.v.max() - vmax0);
            vmin = std::min(vmin, s.v.min());
            records.push_back(compute_record(s));
        };
        const auto t0 = std::chrono::steady_clock::now();
        const auto traj = run(init, Regularization(0.5), cfg, sinks);
        const auto ineq = check_energy_inequality(records, 0.0, kEnergyViolationFraction * std::abs(records.front().energy));
        const double secs = seconds_since(t0);
        const bool ok = traj.back().time == cfg.t_end && drift <= 1e-12 && excess <= 1e-10 && vmin >= 0.0 &&
                        ineq.passed && secs < 60.0;
        return {ok, "8^4 to t = 0.05: mass drift " + sci(drift) + ", max v excess " + sci(excess) + ", energy worst lhs " +
                        sci(ineq.worst) + " (" + std::to_string(ineq.violations) + " violations), " + sci(secs) +
                        " s (< 60 s)"};
    } catch (const std::exception& e) {
        return {false, e.what()};
    }
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* name, const Outcome& o) {
        std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failures += o.passed ? 0 : 1;
    };
    auto guard = [](const std::function<Outcome()>& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    const MassRun mass = mass_run();
    report("mass conservation", guard([&] { return mass_conservation(mass); }));
    report("maximum principle", guard([&] { return maximum_principle(mass); }));
    report("F_eps bounds", guard(f_eps_bounds));
    report("truncation axioms", guard(truncation_axioms));

    auto ref_plan = base_plan(StudyKind::refinement);
    ref_plan.ladder = {16, 32, 64};
    const StudyVerdict ref = refinement_study(ref_plan);
    report("energy inequality", guard([&] { return energy_inequality(ref); }));
    report("oracle equivalence", guard(oracle));

    auto trunc_plan = base_plan(StudyKind::truncation);
    for (int k = 1; k <= 10; ++k) trunc_plan.ladder.push_back(std::ldexp(1.0, k));
    const StudyVerdict trunc = truncation_sweep(trunc_plan);
    report("defect decay", guard([&] { return defect_decay(trunc, mass); }));

    auto eps_plan = base_plan(StudyKind::epsilon);
    eps_plan.ladder = {1.0, 0.5, 0.25, 0.125};
    const StudyVerdict eps = epsilon_sweep(eps_plan);
    report("renormalized residual", guard([&] { return renormalized_residual_criterion(ref, eps); }));
    report("epsilon consistency", guard([&] { return epsilon_consistency(eps); }));
    report("4D smoke", guard(smoke_4d));

    std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
