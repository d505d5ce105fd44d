#pragma once

// Ladder studies over epsilon, truncation level, (h, dt) and the oracle step, each reduced
// to a verdict table with monotonicity flags and observed orders.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rclab/diagnostics.hpp"
#include "rclab/dynamics.hpp"
#include "rclab/oracle.hpp"
#include "rclab/regularization.hpp"
#include "rclab/scenario.hpp"
#include "rclab/weakform.hpp"

namespace rclab {

enum class StudyKind { epsilon, truncation, refinement, oracle };

inline const char* to_string(StudyKind k) {
    switch (k) {
        case StudyKind::epsilon: return "sweep-eps";
        case StudyKind::truncation: return "sweep-trunc";
        case StudyKind::refinement: return "refine";
        case StudyKind::oracle: return "oracle";
    }
    return "?";
}

struct GridSpec {
    std::vector<std::size_t> cells{32, 32};
    std::vector<double> lengths{1.0, 1.0};

    std::size_t dim() const noexcept { return cells.size(); }
    GridPtr make() const { return make_grid(TensorGrid(cells, lengths)); }
    /// Same box with n cells on every axis.
    GridSpec with_cells(std::size_t n) const {
        GridSpec g = *this;
        std::fill(g.cells.begin(), g.cells.end(), n);
        return g;
    }
};

/// Spatial modes and the temporal window as fractions of the horizon.
struct TestSpec {
    std::vector<CosineMode> modes;  // empty: cos(pi x1) cos(pi x2) + 0.5 cos(2 pi x1)
    double start_fraction = 0.3;
    double width_fraction = 0.6;

    TestFunction make(std::size_t dim, double horizon) const {
        std::vector<CosineMode> m = modes;
        if (m.empty()) {
            std::vector<std::size_t> a(dim, 0), b(dim, 0);
            a[0] = 1;
            if (dim > 1) a[1] = 1;
            b[0] = 2;
            m = {CosineMode{1.0, a}, CosineMode{0.5, b}};
        }
        return TestFunction(std::move(m), start_fraction * horizon, width_fraction * horizon);
    }
};

struct StudyPlan {
    StudyKind kind = StudyKind::epsilon;
    GridSpec grid;
    ScenarioSpec scenario;
    SolverConfig solver;
    double epsilon = 0.5;                 // fixed epsilon of truncation, refinement and oracle studies
    std::vector<double> ladder;           // epsilon | level E | cells per axis | dt
    std::vector<double> levels;           // truncation family; empty: dyadic 2 .. 1024
    double dt_over_h2 = 0.25;             // refinement coupling dt = c h^2
    std::size_t snapshot_cadence = 1;
    std::size_t oracle_substeps = 64;     // dt_oracle = dt / oracle_substeps
    TestSpec test;
    std::uint64_t seed = 1;
    bool parallel = true;

    void validate() const {
        if (ladder.empty()) throw InvalidArgument("study plan: ladder is empty");
        solver.validate();
        if (snapshot_cadence == 0) throw InvalidArgument("study plan: snapshot cadence must be positive");
        for (double x : ladder)
            if (!std::isfinite(x) || !(x > 0.0)) throw InvalidArgument("study plan: ladder values must be positive");
        for (std::size_t i = 1; i < ladder.size(); ++i) {
            const double a = ladder[i - 1], b = ladder[i];
            switch (kind) {
                case StudyKind::epsilon:
                case StudyKind::oracle:
                    if (!(b < a)) throw InvalidArgument("study plan: ladder must be strictly decreasing");
                    break;
                case StudyKind::truncation:
                    if (b != 2.0 * a) throw InvalidArgument("study plan: truncation ladder must be dyadic");
                    break;
                case StudyKind::refinement:
                    if (!(b > a) || b != std::floor(b)) {
                        throw InvalidArgument("study plan: refinement ladder must be increasing cell counts");
                    }
                    break;
            }
        }
        if (kind == StudyKind::epsilon && ladder.front() > 1.0) {
            throw InvalidArgument("study plan: epsilon must lie in (0, 1]");
        }
        if (kind == StudyKind::oracle && oracle_substeps == 0) {
            throw InvalidArgument("study plan: oracle_substeps must be positive");
        }
    }

    TruncationFamily family() const {
        if (levels.empty()) return TruncationFamily::dyadic(CutoffProfile::smooth(), 1, 10);
        return TruncationFamily(CutoffProfile::smooth(), levels);
    }
};

struct VerdictFlag {
    std::string name;
    bool value = false;
};

struct ObservedOrder {
    std::string metric;
    std::vector<double> orders;  // log2(e_k / e_{k+1})
    double min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double o : orders) m = std::min(m, o);
        return m;
    }
};

struct StudyVerdict {
    std::string study;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<VerdictFlag> flags;
    std::vector<ObservedOrder> orders;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> notes;
    bool passed = false;

    std::vector<double> column(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw InvalidArgument("verdict: no column '" + name + "'");
        const auto j = static_cast<std::size_t>(it - columns.begin());
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[j]);
        return out;
    }
    const VerdictFlag& flag(const std::string& name) const {
        for (const auto& f : flags)
            if (f.name == name) return f;
        throw InvalidArgument("verdict: no flag '" + name + "'");
    }
    const ObservedOrder& order(const std::string& metric) const {
        for (const auto& o : orders)
            if (o.metric == metric) return o;
        throw InvalidArgument("verdict: no order for '" + metric + "'");
    }
    double summary_value(const std::string& name) const {
        for (const auto& [k, v] : summary)
            if (k == name) return v;
        throw InvalidArgument("verdict: no summary value '" + name + "'");
    }
};

/// log2 ratios of successive errors; empty for fewer than three points. A zero error
/// following a nonzero or zero one counts as an infinite order.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
    std::vector<double> out;
    if (errors.size() < 3) return out;
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
        const double a = errors[k], b = errors[k + 1];
        if (b == 0.0) out.push_back(std::numeric_limits<double>::infinity());
        else if (a == 0.0) out.push_back(-std::numeric_limits<double>::infinity());
        else out.push_back(std::log2(a / b));
    }
    return out;
}

inline bool strictly_decreasing(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] < x[i - 1])) return false;
    return true;
}

inline bool non_increasing(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] <= x[i - 1])) return false;
    return true;
}

/// int_0^T int |a - b| over two trajectories sampled at the same instants.
inline double spacetime_l1_distance(const TrajectoryStore& a, const TrajectoryStore& b, bool use_v = false) {
    if (!(a.grid() == b.grid())) throw DimensionMismatch("spacetime_l1_distance: grids differ");
    const auto ta = a.times(), tb = b.times();
    if (ta != tb) throw InvalidArgument("spacetime_l1_distance: snapshot times differ");
    std::vector<double> d(ta.size());
    std::vector<double> w(a.grid().size());
    for (std::size_t k = 0; k < ta.size(); ++k) {
        const auto& fa = use_v ? a.frames()[k].v : a.frames()[k].u;
        const auto& fb = use_v ? b.frames()[k].v : b.frames()[k].u;
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::abs(fa[i] - fb[i]);
        d[k] = detail::integrate_values(a.grid(), w);
    }
    return detail::trapezoid(ta, d);
}

namespace detail {

/// Evaluates fn(i) for every ladder index, concurrently when asked; results keep ladder order.
template <class R>
std::vector<R> map_ladder(std::size_t n, bool parallel, const std::function<R(std::size_t)>& fn) {
    std::vector<R> out;
    out.reserve(n);
    if (!parallel) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
        return out;
    }
    std::vector<std::future<R>> jobs;
    for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, fn, i));
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

inline TrajectoryStore run_point(const StudyPlan& plan, const GridSpec& grid, double epsilon, double dt) {
    ScenarioSpec sc = plan.scenario;
    sc.seed = plan.seed;
    const auto init = make_initial_data(grid.make(), sc);
    SolverConfig cfg = plan.solver;
    cfg.dt = dt;
    DiagnosticsSinks sinks;
    sinks.snapshot_cadence = plan.snapshot_cadence;
    return run(init, Regularization(epsilon), cfg, sinks);
}

/// Smallest family level above every trajectory's max u.
inline double level_above(const TruncationFamily& fam, const std::vector<TrajectoryStore>& runs) {
    double m = 0.0;
    for (const auto& r : runs) m = std::max(m, r.max_u());
    for (double e : fam.levels())
        if (e > m) return e;
    throw InvalidArgument("study: no truncation level exceeds max u = " + std::to_string(m));
}

inline void finish(StudyVerdict& v) {
    v.passed = v.notes.empty();
    for (const auto& f : v.flags) v.passed = v.passed && f.value;
}

template <class Fn>
bool guarded(StudyVerdict& v, Fn&& fn) {
    try {
        fn();
        return true;
    } catch (const std::exception& e) {
        v.notes.push_back(e.what());
        v.passed = false;
        return false;
    }
}

}  // namespace detail

inline constexpr double kBudgetStabilityTolerance = 0.2;
inline constexpr double kEnergyViolationFraction = 1e-6;
inline constexpr double kOracleGapTolerance = 1e-3;
inline constexpr double kPartitionTolerance = 1e-10;

/// Pairwise space-time L1 distances of successive epsilon runs, budgets and the
/// renormalized residual (xi = phi_E above max u) per epsilon.
inline StudyVerdict epsilon_sweep(const StudyPlan& plan) {
    StudyVerdict v;
    v.study = to_string(StudyKind::epsilon);
    v.columns = {"epsilon",         "l1_u_to_previous", "l1_v_to_previous", "renormalized_residual",
                 "consistency_bound", "discretization",  "sup_u_logu_abs",   "sup_grad_v_sq",
                 "int_fisher",      "int_feps_gradv",   "int_u_pow"};
    detail::guarded(v, [&] {
        StudyPlan p = plan;
        p.kind = StudyKind::epsilon;
        p.validate();
        const auto runs = detail::map_ladder<TrajectoryStore>(p.ladder.size(), p.parallel, [&](std::size_t i) {
            return detail::run_point(p, p.grid, p.ladder[i], p.solver.dt);
        });
        const auto fam = p.family();
        const double level = detail::level_above(fam, runs);
        const Renormalizer xi(fam, level);
        const auto psi = p.test.make(p.grid.dim(), p.solver.t_end);
        std::vector<double> du, dv, res;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double a = i == 0 ? nan : spacetime_l1_distance(runs[i - 1], runs[i], false);
            const double b = i == 0 ? nan : spacetime_l1_distance(runs[i - 1], runs[i], true);
            if (i > 0) {
                du.push_back(a);
                dv.push_back(b);
            }
            const auto rr = renormalized_residual(runs[i], xi, psi);
            res.push_back(rr.residual());
            const auto bud = check_budgets(runs[i].records()).values();
            v.rows.push_back({p.ladder[i], a, b, rr.residual(), rr.consistency_bound, rr.discretization(), bud[0],
                              bud[1], bud[2], bud[3], bud[4]});
        }
        std::vector<BudgetReport> reports;
        for (const auto& r : runs) reports.push_back(check_budgets(r.records()));
        double spread = 0.0;
        if (reports.size() >= 2) {
            const BudgetReport extra = reports.back();
            reports.pop_back();
            spread = budget_ladder_stability(reports, extra).worst_change;
        }
        v.flags = {{"l1_u_decreasing", strictly_decreasing(du)},
                   {"l1_v_decreasing", strictly_decreasing(dv)},
                   {"renormalized_residual_decreasing", strictly_decreasing(res)},
                   {"budgets_stable", spread <= kBudgetStabilityTolerance}};
        v.summary = {{"renormalizer_level", level}, {"budget_change_on_last", spread}};
        detail::finish(v);
    });
    return v;
}

/// |mu^E| along a dyadic level ladder on one run, the sup |phi_E''| column of the axiom
/// report, and the level-partition identities against the diagnostics budgets.
inline StudyVerdict truncation_sweep(const StudyPlan& plan) {
    StudyVerdict v;
    v.study = to_string(StudyKind::truncation);
    v.columns = {"level", "mu_mass", "sup_second_below_1", "sup_second_below_10", "sup_second_below_100"};
    detail::guarded(v, [&] {
        StudyPlan p = plan;
        p.kind = StudyKind::truncation;
        p.validate();
        const auto traj = detail::run_point(p, p.grid, p.epsilon, p.solver.dt);
        const TruncationFamily fam(CutoffProfile::smooth(), p.ladder);
        const auto rep = defect_measures(traj, fam);
        const auto samples = default_truncation_samples(fam);
        for (std::size_t l = 0; l < fam.levels().size(); ++l) {
            const double e = fam.levels()[l];
            v.rows.push_back({e, rep.mu_mass[l], sup_second_below(fam, e, samples, 1.0),
                              sup_second_below(fam, e, samples, 10.0), sup_second_below(fam, e, samples, 100.0)});
        }
        const auto decay = assess_defect_decay(rep);
        const auto bud = check_budgets(traj.records());
        const double nu_budget = 0.25 * bud.int_fisher;
        const double nu_err = std::abs(rep.nu_sum() - nu_budget) / std::max(std::abs(nu_budget), 1e-300);
        const double gamma_err =
            std::abs(rep.gamma_sum() - bud.int_feps_gradv) / std::max(std::abs(bud.int_feps_gradv), 1e-300);
        v.flags = {{"zero_above_max_u", decay.zero_above_max},
                   {"non_increasing_above_median", decay.monotone_above_median},
                   {"nu_partition", nu_err <= kPartitionTolerance},
                   {"gamma_partition", gamma_err <= kPartitionTolerance}};
        v.summary = {{"max_u", rep.max_u},       {"median_u", rep.median_u},      {"nu_sum", rep.nu_sum()},
                     {"nu_budget", nu_budget},   {"nu_relative_error", nu_err},   {"gamma_sum", rep.gamma_sum()},
                     {"gamma_budget", bud.int_feps_gradv}, {"gamma_relative_error", gamma_err}};
        detail::finish(v);
    });
    return v;
}

/// (h, dt = c h^2) ladder: truncated-identity residual above max u, the discretization
/// part of the renormalized residual, the v weak residual and the energy inequality.
inline StudyVerdict refinement_study(const StudyPlan& plan) {
    StudyVerdict v;
    v.study = to_string(StudyKind::refinement);
    v.columns = {"cells",   "h",           "dt",          "truncated_residual", "renormalized_discretization",
                 "v_weak_residual", "energy_violation", "energy_worst_lhs", "energy0"};
    detail::guarded(v, [&] {
        StudyPlan p = plan;
        p.kind = StudyKind::refinement;
        p.validate();
        std::vector<GridSpec> grids;
        std::vector<double> dts;
        for (double n : p.ladder) {
            grids.push_back(p.grid.with_cells(static_cast<std::size_t>(n)));
            const double h = grids.back().make()->min_spacing();
            dts.push_back(p.dt_over_h2 * h * h);
        }
        const auto runs = detail::map_ladder<TrajectoryStore>(p.ladder.size(), p.parallel, [&](std::size_t i) {
            return detail::run_point(p, grids[i], p.epsilon, dts[i]);
        });
        const auto fam = p.family();
        const double level = detail::level_above(fam, runs);
        const auto psi = p.test.make(p.grid.dim(), p.solver.t_end);
        std::vector<double> tr, rd, vw, ev, lhs;
        double e0 = 0.0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            tr.push_back(truncated_identity_residual(runs[i], fam, level, psi).residual());
            rd.push_back(renormalized_residual(runs[i], Renormalizer(fam, level), psi).discretization());
            vw.push_back(v_weak_residual(runs[i], psi).eps_residual());
            const auto ineq = check_energy_inequality(runs[i].records(), 0.0, 0.0);
            ev.push_back(ineq.worst_violation);
            lhs.push_back(ineq.worst);
            e0 = runs[i].records().front().energy;
            v.rows.push_back({p.ladder[i], runs[i].grid().min_spacing(), dts[i], tr.back(), rd.back(), vw.back(),
                              ev.back(), lhs.back(), e0});
        }
        v.orders = {{"truncated_residual", observed_orders(tr)},
                    {"renormalized_discretization", observed_orders(rd)},
                    {"v_weak_residual", observed_orders(vw)},
                    {"energy_violation", observed_orders(ev)}};
        const bool have_orders = runs.size() >= 3;
        for (const auto& o : v.orders) v.flags.push_back({o.metric + "_order", have_orders && o.min() >= 1.0});
        v.flags.push_back({"energy_violation_bound", ev.back() <= kEnergyViolationFraction * std::abs(e0)});
        v.summary = {{"level", level}};
        detail::finish(v);
    });
    return v;
}

/// IMEX against the explicit oracle at dt_oracle = dt / substeps: relative max-norm gap of
/// u at the final time.
inline StudyVerdict oracle_comparison(const StudyPlan& plan) {
    StudyVerdict v;
    v.study = to_string(StudyKind::oracle);
    v.columns = {"dt", "dt_oracle", "gap_u", "gap_v"};
    detail::guarded(v, [&] {
        StudyPlan p = plan;
        p.kind = StudyKind::oracle;
        p.validate();
        struct Gap {
            double u, v;
        };
        ScenarioSpec sc = p.scenario;
        sc.seed = p.seed;
        const auto init = make_initial_data(p.grid.make(), sc);
        const Regularization reg(p.epsilon);
        const auto gaps = detail::map_ladder<Gap>(p.ladder.size(), p.parallel, [&](std::size_t i) {
            SolverConfig cfg = p.solver;
            cfg.dt = p.ladder[i];
            DiagnosticsSinks sinks;
            sinks.records = false;
            sinks.snapshot_cadence = std::numeric_limits<std::size_t>::max();
            const auto fast = run(init, reg, cfg, sinks);
            const auto slow = oracle_solve(init, reg, cfg.t_end, cfg.dt / static_cast<double>(p.oracle_substeps),
                                           std::numeric_limits<std::size_t>::max());
            const auto rel = [](const ScalarField& a, const ScalarField& b) {
                double d = 0.0, m = 0.0;
                for (std::size_t c = 0; c < a.size(); ++c) {
                    d = std::max(d, std::abs(a[c] - b[c]));
                    m = std::max(m, std::abs(b[c]));
                }
                return d / m;
            };
            return Gap{rel(fast.back().u, slow.back().u), rel(fast.back().v, slow.back().v)};
        });
        std::vector<double> gu;
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            gu.push_back(gaps[i].u);
            v.rows.push_back({p.ladder[i], p.ladder[i] / static_cast<double>(p.oracle_substeps), gaps[i].u, gaps[i].v});
        }
        v.orders = {{"gap_u", observed_orders(gu)}};
        bool bound = true;
        for (double g : gu) bound = bound && g <= kOracleGapTolerance;
        v.flags = {{"gap_u_order", gu.size() >= 3 && v.orders[0].min() >= 1.0}, {"gap_u_bound", bound}};
        detail::finish(v);
    });
    return v;
}

inline StudyVerdict run_study(const StudyPlan& plan) {
    switch (plan.kind) {
        case StudyKind::epsilon: return epsilon_sweep(plan);
        case StudyKind::truncation: return truncation_sweep(plan);
        case StudyKind::refinement: return refinement_study(plan);
        case StudyKind::oracle: return oracle_comparison(plan);
    }
    throw InvalidArgument("unknown study kind");
}

}  // namespace rclab
