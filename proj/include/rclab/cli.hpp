#pragma once

// Command-line entry points. Exit codes: 0 pass, 1 assertion failure, 2 usage or config error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rclab/dynamics.hpp"
#include "rclab/experiments.hpp"
#include "rclab/io/config.hpp"
#include "rclab/io/csv.hpp"
#include "rclab/io/manifest.hpp"
#include "rclab/io/snapshot.hpp"
#include "rclab/regularization.hpp"
#include "rclab/scenario.hpp"
#include "rclab/weakform.hpp"

namespace rclab::cli {

enum Exit : int { kPass = 0, kFail = 1, kUsage = 2 };

inline constexpr const char* kOutputRootVariable = "RCLAB_OUTPUT_ROOT";
inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kMaxPrincipleSlack = 1e-10;
inline constexpr double kResidualReproduction = 1e-9;

namespace fs = std::filesystem;

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline fs::path output_root(const io::RunConfig& c, const std::string& override_root) {
    if (!override_root.empty()) return override_root;
    if (!c.output_directory.empty()) return c.output_directory;
    if (const char* env = std::getenv(kOutputRootVariable); env && *env) return env;
    return "rclab-out";
}

/// Disjoint per-config directory: <root>/<command>-<config hash>.
inline fs::path run_directory(const io::RunConfig& c, const std::string& command, const std::string& override_root) {
    return output_root(c, override_root) / (command + "-" + io::config_hash(c));
}

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

inline void print_check(std::ostream& out, const io::Check& c) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
}

/// Default test functions: psi = 1, single cosine modes and their combination.
inline std::vector<TestFunction> default_tests(const io::RunConfig& c) {
    const std::size_t d = c.grid.dim();
    const double t0 = c.study.test_start * c.solver.t_end;
    const double w = c.study.test_width * c.solver.t_end;
    std::vector<TestFunction> tests;
    tests.push_back(TestFunction::constant_in_space(d, t0, w));
    std::vector<std::size_t> k(d, 0);
    k[0] = 1;
    tests.push_back(TestFunction::mode(k, t0, w));
    if (d > 1) {
        k[1] = 1;
        tests.push_back(TestFunction::mode(k, t0, w));
    }
    tests.push_back(c.test_spec().make(d, c.solver.t_end));
    return tests;
}

inline std::string describe(const TestFunction& t) {
    std::string s;
    for (const auto& m : t.modes()) {
        if (!s.empty()) s += " + ";
        s += io::format_double(m.coefficient) + "*cos(";
        for (std::size_t a = 0; a < m.wavenumbers.size(); ++a) s += (a ? "," : "") + std::to_string(m.wavenumbers[a]);
        s += ")";
    }
    return s + " x theta((t-" + io::format_double(t.t0()) + ")/" + io::format_double(t.width()) + ")";
}

/// Family levels up to and including the first one above max u; higher levels act
/// identically on the trajectory.
inline std::vector<double> active_levels(const TruncationFamily& fam, double max_u) {
    std::vector<double> out;
    for (double e : fam.levels()) {
        out.push_back(e);
        if (e > max_u) break;
    }
    return out;
}

struct TrajectoryChecks {
    std::vector<io::Check> checks;
    DefectMeasureReport defect;
};

/// Mass, maximum principle and positivity over the snapshots of a trajectory.
inline std::vector<io::Check> field_checks(const TrajectoryStore& traj) {
    const double m0 = integrate(traj.front().u);
    const double vmax0 = traj.front().v.max();
    double drift = 0.0, vmax = 0.0, vmin = std::numeric_limits<double>::infinity(),
           umin = std::numeric_limits<double>::infinity();
    for (const auto& f : traj.frames()) {
        drift = std::max(drift, std::abs(integrate(f.u) - m0) / m0);
        vmax = std::max(vmax, f.v.max());
        vmin = std::min(vmin, f.v.min());
        umin = std::min(umin, f.u.min());
    }
    std::vector<io::Check> out;
    out.push_back({"mass conservation", drift <= kMassTolerance, drift, kMassTolerance,
                   "max relative drift of int u = " + fmt(drift) + " (tolerance " + fmt(kMassTolerance) + ")"});
    const bool mp = vmax <= vmax0 + kMaxPrincipleSlack && vmin >= 0.0;
    out.push_back({"maximum principle", mp, vmax - vmax0, kMaxPrincipleSlack,
                   "max v - max v0 = " + fmt(vmax - vmax0) + ", min v = " + fmt(vmin)});
    out.push_back({"positivity of u", umin >= 0.0, umin, 0.0, "min u = " + fmt(umin)});
    return out;
}

inline std::vector<io::Check> defect_checks(const TrajectoryStore& traj, const TruncationFamily& fam,
                                            std::span<const DiagnosticsRecord> records, DefectMeasureReport& rep) {
    rep = defect_measures(traj, fam);
    const auto decay = assess_defect_decay(rep);
    std::vector<io::Check> out;
    out.push_back({"defect decay", decay.passed(), 0.0, 0.0,
                   std::string("mu^E zero above max u: ") + (decay.zero_above_max ? "yes" : "no") +
                       ", non-increasing above median: " + (decay.monotone_above_median ? "yes" : "no")});
    if (!records.empty()) {
        const auto bud = check_budgets(records);
        const double nu_ref = 0.25 * bud.int_fisher;
        const double nu_err = std::abs(rep.nu_sum() - nu_ref) / std::max(std::abs(nu_ref), 1e-300);
        const double g_err =
            std::abs(rep.gamma_sum() - bud.int_feps_gradv) / std::max(std::abs(bud.int_feps_gradv), 1e-300);
        out.push_back({"level partition nu", nu_err <= kPartitionTolerance, nu_err, kPartitionTolerance,
                       "sum_K nu^K vs fisher budget / 4: relative error " + fmt(nu_err)});
        out.push_back({"level partition gamma", g_err <= kPartitionTolerance, g_err, kPartitionTolerance,
                       "sum_K gamma^K vs feps_gradv budget: relative error " + fmt(g_err)});
    }
    return out;
}

inline io::CsvTable defect_table(const DefectMeasureReport& rep) {
    io::CsvTable t{{"level", "mu_mass"}, {}};
    for (std::size_t l = 0; l < rep.levels.size(); ++l) t.rows.push_back({rep.levels[l], rep.mu_mass[l]});
    return t;
}

inline io::CsvTable level_table(const DefectMeasureReport& rep) {
    io::CsvTable t{{"K", "nu", "gamma"}, {}};
    for (std::size_t k = 0; k < rep.nu.size(); ++k) t.rows.push_back({static_cast<double>(k + 1), rep.nu[k], rep.gamma[k]});
    return t;
}

/// Residual matrix, or nothing when the snapshots do not resolve the test window.
inline std::optional<ResidualMatrix> try_residuals(const TrajectoryStore& traj, const io::RunConfig& c,
                                                   const TruncationFamily& fam, std::string& why) {
    const auto tests = default_tests(c);
    try {
        for (const auto& t : tests) t.validate(traj.times(), true);
    } catch (const InvalidArgument& e) {
        why = e.what();
        return std::nullopt;
    }
    return residual_matrix(traj, fam, active_levels(fam, traj.max_u()), tests, c.study.parallel);
}

inline io::CsvTable as_table(const ResidualMatrix& m) { return io::CsvTable{m.columns, m.rows}; }

inline std::string snapshot_name(std::size_t step) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "snapshots/step_%09zu.rclb", step);
    return buf;
}

inline int finish(std::ostream& out, const io::Manifest& m, const fs::path& dir) {
    io::write_manifest((dir / "manifest.json").string(), m);
    for (const auto& c : m.checks) print_check(out, c);
    out << (m.passed() ? "PASS" : "FAIL") << " " << m.command << " -> " << dir.string() << "\n";
    return m.passed() ? kPass : kFail;
}

}  // namespace detail

inline int cmd_run(const io::RunConfig& c, const std::string& out_root, std::ostream& out) {
    detail::Stopwatch total;
    const fs::path dir = detail::run_directory(c, "run", out_root);
    fs::create_directories(dir);
    fs::remove_all(dir / "snapshots");
    fs::create_directories(dir / "snapshots");

    const auto init = make_initial_data(c.grid.make(), c.scenario);
    const Regularization reg(c.epsilon);
    const auto fam = c.family();

    std::vector<DiagnosticsRecord> records;
    DiagnosticsSinks sinks;
    sinks.snapshot_cadence = c.snapshot_cadence;
    sinks.records = true;
    sinks.on_step = [&](const SolverState& s) { records.push_back(compute_record(s)); };
    detail::Stopwatch solve;
    const auto traj = run(init, reg, c.solver, sinks);
    const double solve_s = solve.seconds();

    io::Manifest m;
    m.command = "run";
    m.config_hash = io::config_hash(c);
    m.config_text = io::to_text(c);

    detail::Stopwatch analysis;
    m.checks = detail::field_checks(traj);
    const auto ineq = check_energy_inequality(records, 0.0, kEnergyViolationFraction * std::abs(records.front().energy));
    m.checks.push_back({"energy inequality", ineq.passed, ineq.worst_violation,
                        kEnergyViolationFraction * std::abs(records.front().energy),
                        std::to_string(ineq.violations) + " violating steps, worst left side " + detail::fmt(ineq.worst)});
    DefectMeasureReport rep;
    for (auto& ch : detail::defect_checks(traj, fam, traj.records(), rep)) m.checks.push_back(std::move(ch));

    std::string why;
    const auto residuals = detail::try_residuals(traj, c, fam, why);
    const double analysis_s = analysis.seconds();

    detail::Stopwatch writing;
    io::write_text_file((dir / "diagnostics.csv").string(), io::to_csv(io::diagnostics_table(records)));
    m.outputs.push_back("diagnostics.csv");
    io::write_text_file((dir / "defect.csv").string(), io::to_csv(detail::defect_table(rep)));
    m.outputs.push_back("defect.csv");
    io::write_text_file((dir / "levels.csv").string(), io::to_csv(detail::level_table(rep)));
    m.outputs.push_back("levels.csv");
    if (residuals) {
        io::write_text_file((dir / "residuals.csv").string(), io::to_csv(detail::as_table(*residuals)));
        m.outputs.push_back("residuals.csv");
        nlohmann::json tests = nlohmann::json::array();
        for (const auto& t : detail::default_tests(c)) tests.push_back(detail::describe(t));
        m.extra["test_functions"] = tests;
    } else {
        m.extra["residuals_skipped"] = why;
    }
    for (const auto& f : traj.frames()) {
        const auto name = detail::snapshot_name(f.step);
        io::write_snapshot((dir / name).string(), io::snapshot_of(f));
        m.outputs.push_back(name);
    }
    m.extra["steps"] = records.size() - 1;
    m.extra["snapshots"] = traj.size();
    m.extra["max_u"] = traj.max_u();
    m.timings = {{"solve", solve_s}, {"analysis", analysis_s}, {"write", writing.seconds()}, {"total", total.seconds()}};
    return detail::finish(out, m, dir);
}

inline void print_verdict(std::ostream& out, const StudyVerdict& v) {
    out << v.study << "\n";
    for (const auto& c : v.columns) out << c << (c == v.columns.back() ? "\n" : "  ");
    for (const auto& r : v.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) out << detail::fmt(r[j]) << (j + 1 == r.size() ? "\n" : "  ");
    }
    for (const auto& o : v.orders) {
        out << "order " << o.metric << ":";
        for (double x : o.orders) out << " " << detail::fmt(x);
        out << "\n";
    }
    for (const auto& [k, x] : v.summary) out << k << " = " << detail::fmt(x) << "\n";
    for (const auto& n : v.notes) out << "note: " << n << "\n";
}

/// kind,name,value lines: flags as 0/1, orders as order_<k>, summary values.
inline std::string verdict_summary_csv(const StudyVerdict& v) {
    std::string s = "kind,name,value\n";
    for (const auto& f : v.flags) s += "flag," + f.name + "," + (f.value ? "1" : "0") + "\n";
    for (const auto& o : v.orders)
        for (std::size_t k = 0; k < o.orders.size(); ++k)
            s += "order," + o.metric + "_" + std::to_string(k) + "," + io::format_double(o.orders[k]) + "\n";
    for (const auto& [k, x] : v.summary) s += "summary," + k + "," + io::format_double(x) + "\n";
    s += std::string("verdict,passed,") + (v.passed ? "1" : "0") + "\n";
    return s;
}

inline int cmd_study(const io::RunConfig& c, StudyKind kind, const std::string& out_root, std::ostream& out) {
    detail::Stopwatch total;
    const std::string command = to_string(kind);
    const fs::path dir = detail::run_directory(c, command, out_root);
    fs::create_directories(dir);
    const StudyPlan plan = c.study_plan(kind);
    plan.validate();
    const StudyVerdict v = run_study(plan);
    print_verdict(out, v);

    io::Manifest m;
    m.command = command;
    m.config_hash = io::config_hash(c);
    m.config_text = io::to_text(c);
    for (const auto& f : v.flags) m.checks.push_back({f.name, f.value, f.value ? 1.0 : 0.0, 0.0, v.study + " flag"});
    for (const auto& n : v.notes) m.checks.push_back({"run", false, 0.0, 0.0, n});
    io::write_text_file((dir / "verdict.csv").string(), io::to_csv(io::CsvTable{v.columns, v.rows}));
    io::write_text_file((dir / "verdict_summary.csv").string(), verdict_summary_csv(v));
    m.outputs = {"verdict.csv", "verdict_summary.csv"};
    m.extra["ladder"] = plan.ladder;
    m.timings = {{"total", total.seconds()}};
    return detail::finish(out, m, dir);
}

inline int cmd_verify_truncation(const std::vector<double>& levels, const std::string& profile, std::ostream& out) {
    const CutoffProfile p = profile == "step" ? CutoffProfile::step() : CutoffProfile::smooth();
    const TruncationFamily fam = levels.empty() ? TruncationFamily::dyadic(p, 1, 10) : TruncationFamily(p, levels);
    const auto rep = verify_truncation_axioms(fam, default_truncation_samples(fam));
    out << "profile " << profile << ", levels " << fam.levels().front() << " .. " << fam.levels().back() << " ("
        << fam.levels().size() << "), K1 = " << detail::fmt(fam.k1()) << ", K2 = " << detail::fmt(fam.k2()) << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-5s %-6s %-14s %-14s %-10s %s\n", "axiom", "result", "worst", "witness_v",
                  "level", "condition");
    out << line;
    for (const auto& ch : rep.checks) {
        std::snprintf(line, sizeof line, "%-5s %-6s %-14s %-14s %-10g %s\n", ch.axiom.c_str(),
                      ch.passed ? "PASS" : "FAIL", detail::fmt(ch.worst).c_str(), detail::fmt(ch.witness_v).c_str(),
                      ch.witness_level, ch.description.c_str());
        out << line;
        if (!ch.detail.empty()) out << "      " << ch.detail << "\n";
    }
    out << "sup_{v<=K} |phi_E''| along the ladder\n";
    for (std::size_t k = 0; k < rep.k_values.size(); ++k) {
        out << "K = " << rep.k_values[k] << ":";
        for (double s : rep.sup_second_below_k[k]) out << " " << detail::fmt(s);
        out << "\n";
    }
    out << (rep.all_passed() ? "PASS" : "FAIL") << " verify-truncation\n";
    return rep.all_passed() ? kPass : kFail;
}

inline int cmd_audit(const io::RunConfig& c, const fs::path& dir, std::ostream& out, std::ostream& err) {
    const auto m = io::read_manifest((dir / "manifest.json").string());
    const std::string hash = io::config_hash(c);
    if (m.config_hash != hash) {
        err << "audit: refusing " << dir.string() << ": manifest config hash " << m.config_hash
            << " does not match the supplied config (" << hash << ")\n";
        return kUsage;
    }
    std::vector<io::Check> checks;
    TrajectoryStore traj(c.grid.make(), c.epsilon);
    try {
        for (const auto& name : m.outputs) {
            if (name.rfind("snapshots/", 0) != 0) continue;
            const auto snap = io::read_snapshot((dir / name).string());
            traj.add(io::frame_of(snap, traj.grid_ptr(), traj.size()));
        }
        if (traj.size() < 2) throw FormatError("fewer than two snapshots listed in the manifest");
    } catch (const Error& e) {
        checks.push_back({"snapshot integrity", false, 0.0, 0.0, e.what()});
        for (const auto& ch : checks) detail::print_check(out, ch);
        out << "FAIL audit " << dir.string() << "\n";
        return kFail;
    }
    checks.push_back({"snapshot integrity", true, static_cast<double>(traj.size()), 0.0,
                      std::to_string(traj.size()) + " snapshots read"});
    for (auto& ch : detail::field_checks(traj)) checks.push_back(std::move(ch));

    std::vector<DiagnosticsRecord> records;
    for (const auto& f : traj.frames()) records.push_back(compute_record(SolverState{f.time, f.u, f.v, Regularization(c.epsilon), f.step}));
    DefectMeasureReport rep;
    for (auto& ch : detail::defect_checks(traj, c.family(), records, rep)) checks.push_back(std::move(ch));

    const auto fam = c.family();
    std::string why;
    const auto residuals = detail::try_residuals(traj, c, fam, why);
    if (std::find(m.outputs.begin(), m.outputs.end(), "residuals.csv") != m.outputs.end()) {
        const auto stored = io::parse_csv(io::read_text_file((dir / "residuals.csv").string()));
        double worst = 0.0;
        bool ok = residuals.has_value() && stored.columns == residuals->columns &&
                  stored.rows.size() == residuals->rows.size();
        if (ok) {
            for (std::size_t i = 0; i < stored.rows.size(); ++i)
                for (std::size_t j = 0; j < stored.columns.size(); ++j) {
                    const double a = stored.rows[i][j], b = residuals->rows[i][j];
                    const double d = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
                    if (std::abs(a - b) > 1e-300) worst = std::max(worst, d);
                }
            ok = worst <= kResidualReproduction;
        }
        checks.push_back({"residual reproduction", ok, worst, kResidualReproduction,
                          residuals ? "max relative difference to stored residuals " + detail::fmt(worst)
                                    : "residuals not recomputable: " + why});
    }
    bool passed = true;
    for (const auto& ch : checks) {
        detail::print_check(out, ch);
        passed = passed && ch.passed;
    }
    out << (passed ? "PASS" : "FAIL") << " audit " << dir.string() << "\n";
    return passed ? kPass : kFail;
}

/// Long-format flattening of every CSV listed in a manifest: source,row,column,value.
inline int cmd_report_data(const fs::path& dir, const std::string& out_file, std::ostream& out) {
    const auto m = io::read_manifest((dir / "manifest.json").string());
    std::string s = "source,row,column,value\n";
    std::size_t count = 0;
    for (const auto& name : m.outputs) {
        if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
        const std::string text = io::read_text_file((dir / name).string());
        if (name == "verdict_summary.csv") {
            std::size_t row = 0, pos = text.find('\n') + 1;
            while (pos < text.size()) {
                const auto end = text.find('\n', pos);
                const auto cells = io::split_commas(std::string_view(text).substr(pos, end - pos));
                if (cells.size() == 3) {
                    s += name + "," + std::to_string(row++) + "," + cells[0] + ":" + cells[1] + "," + cells[2] + "\n";
                    ++count;
                }
                pos = end == std::string::npos ? text.size() : end + 1;
            }
            continue;
        }
        const auto t = io::parse_csv(text);
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            for (std::size_t j = 0; j < t.columns.size(); ++j) {
                s += name + "," + std::to_string(i) + "," + t.columns[j] + "," + io::format_double(t.rows[i][j]) + "\n";
                ++count;
            }
    }
    const fs::path target = out_file.empty() ? dir / "report_data.csv" : fs::path(out_file);
    io::write_text_file(target.string(), s);
    out << "wrote " << count << " values to " << target.string() << "\n";
    return kPass;
}

/// Parses argv and dispatches; never throws.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"rclab: regularized chemotaxis-consumption laboratory"};
    app.require_subcommand(1);
    std::string config_path, out_root, dir, out_file, profile = "smooth";
    std::vector<std::string> overrides;
    std::vector<double> levels;

    auto with_config = [&](CLI::App* sc) {
        sc->add_option("-c,--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sc->add_option("-s,--set", overrides, "override section.key=value (repeatable)");
    };
    auto* run = app.add_subcommand("run", "integrate one configuration and check its invariants");
    with_config(run);
    run->add_option("-o,--output", out_root, "output root (default: config, $RCLAB_OUTPUT_ROOT, ./rclab-out)");
    std::vector<std::pair<CLI::App*, StudyKind>> studies = {
        {app.add_subcommand("sweep-eps", "epsilon ladder"), StudyKind::epsilon},
        {app.add_subcommand("sweep-trunc", "truncation-level ladder"), StudyKind::truncation},
        {app.add_subcommand("refine", "(h, dt) refinement ladder"), StudyKind::refinement},
        {app.add_subcommand("oracle", "IMEX against the explicit oracle"), StudyKind::oracle}};
    for (auto& [sc, kind] : studies) {
        with_config(sc);
        sc->add_option("-o,--output", out_root, "output root");
    }
    auto* vt = app.add_subcommand("verify-truncation", "print the truncation axiom table");
    vt->add_option("-l,--levels", levels, "truncation levels (default: 2, 4, ..., 1024)")->delimiter(',');
    vt->add_option("-p,--profile", profile, "cutoff profile")->check(CLI::IsMember({"smooth", "step"}));
    auto* audit = app.add_subcommand("audit", "re-check stored snapshots of a run");
    with_config(audit);
    audit->add_option("-d,--dir", dir, "run directory")->required()->check(CLI::ExistingDirectory);
    auto* report = app.add_subcommand("report-data", "flatten the CSV outputs of a run or study directory");
    report->add_option("-d,--dir", dir, "run or study directory")->required()->check(CLI::ExistingDirectory);
    report->add_option("--out", out_file, "output file (default: <dir>/report_data.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "rclab: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    try {
        auto config = [&] { return io::parse_config(io::read_text_file(config_path), overrides); };
        if (run->parsed()) return cmd_run(config(), out_root, out);
        for (auto& [sc, kind] : studies)
            if (sc->parsed()) return cmd_study(config(), kind, out_root, out);
        if (vt->parsed()) return cmd_verify_truncation(levels, profile, out);
        if (audit->parsed()) return cmd_audit(config(), dir, out, err);
        if (report->parsed()) return cmd_report_data(dir, out_file, out);
    } catch (const ConfigError& e) {
        err << "rclab: configuration error\n";
        for (const auto& v : e.violations()) err << "  " << v << "\n";
        return kUsage;
    } catch (const InvalidArgument& e) {
        err << "rclab: invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "rclab: " << e.what() << "\n";
        return kFail;
    }
    return kUsage;
}

}  // namespace rclab::cli
