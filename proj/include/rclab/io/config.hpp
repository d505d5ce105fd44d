#pragma once

// Line-oriented configuration:
//
//   # comment
//   [section]
//   key = value          lists are comma separated
//
// Every violation found is collected before ConfigError is thrown.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rclab/error.hpp"
#include "rclab/experiments.hpp"
#include "rclab/io/csv.hpp"

namespace rclab::io {

struct StudySection {
    std::vector<double> ladder;   // empty: the default ladder of the chosen study
    double dt_over_h2 = 0.25;
    std::size_t oracle_substeps = 64;
    bool parallel = true;
    double test_start = 0.3;
    double test_width = 0.6;
};

struct RunConfig {
    GridSpec grid;
    double epsilon = 0.5;
    std::vector<double> levels;   // empty: dyadic 2 .. 1024
    ScenarioSpec scenario;
    SolverConfig solver;
    std::string output_directory;  // empty: RCLAB_OUTPUT_ROOT or ./rclab-out
    std::size_t snapshot_cadence = 1;
    StudySection study;

    TruncationFamily family() const {
        if (levels.empty()) return TruncationFamily::dyadic(CutoffProfile::smooth(), 1, 10);
        return TruncationFamily(CutoffProfile::smooth(), levels);
    }

    TestSpec test_spec() const {
        TestSpec t;
        t.start_fraction = study.test_start;
        t.width_fraction = study.test_width;
        return t;
    }

    StudyPlan study_plan(StudyKind kind) const {
        StudyPlan p;
        p.kind = kind;
        p.grid = grid;
        p.scenario = scenario;
        p.solver = solver;
        p.epsilon = epsilon;
        p.levels = levels;
        p.dt_over_h2 = study.dt_over_h2;
        p.snapshot_cadence = snapshot_cadence;
        p.oracle_substeps = study.oracle_substeps;
        p.test = test_spec();
        p.seed = scenario.seed;
        p.parallel = study.parallel;
        p.ladder = study.ladder;
        if (p.ladder.empty()) {
            switch (kind) {
                case StudyKind::epsilon: p.ladder = {1.0, 0.5, 0.25, 0.125}; break;
                case StudyKind::truncation:
                    for (int k = 1; k <= 10; ++k) p.ladder.push_back(std::ldexp(1.0, k));
                    break;
                case StudyKind::refinement: p.ladder = {16, 32, 64}; break;
                case StudyKind::oracle: p.ladder = {solver.dt, solver.dt / 2, solver.dt / 4}; break;
            }
        }
        return p;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Entry {
    std::string value;
    std::size_t line = 0;
};

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> k = {
        {"grid", {"dim", "cells", "lengths"}},
        {"model", {"epsilon", "levels"}},
        {"scenario", {"kind", "background", "amplitude", "center", "width", "v_level", "v_amplitude", "modes", "seed"}},
        {"solver", {"dt", "t_end", "scheme", "cfl_safety", "clamp_policy", "cg_tolerance", "cg_max_iterations"}},
        {"output", {"directory", "snapshot_cadence"}},
        {"study", {"ladder", "dt_over_h2", "oracle_substeps", "parallel", "test_start", "test_width"}},
    };
    return k;
}

/// Typed access to parsed entries; every failure is appended to `violations`.
class Reader {
public:
    Reader(const std::map<std::string, Entry>& entries, std::vector<std::string>& violations)
        : entries_(entries), violations_(violations) {}

    std::optional<double> number(const std::string& key, const std::function<bool(double)>& ok, const char* range) {
        const auto* e = find(key);
        if (!e) return std::nullopt;
        try {
            const double x = parse_double(e->value);
            if (!ok(x)) {
                fail(*e, key, "value " + e->value + " out of range " + range);
                return std::nullopt;
            }
            return x;
        } catch (const FormatError&) {
            fail(*e, key, "'" + e->value + "' is not a number");
            return std::nullopt;
        }
    }

    std::optional<std::uint64_t> integer(const std::string& key, std::uint64_t lo, std::uint64_t hi) {
        const auto* e = find(key);
        if (!e) return std::nullopt;
        const auto v = parse_integer(e->value);
        if (!v) {
            fail(*e, key, "'" + e->value + "' is not a nonnegative integer");
            return std::nullopt;
        }
        if (*v < lo || *v > hi) {
            fail(*e, key, "value " + e->value + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::vector<double>> numbers(const std::string& key, const std::function<bool(double)>& ok,
                                               const char* range) {
        const auto* e = find(key);
        if (!e) return std::nullopt;
        std::vector<double> out;
        for (const auto& part : split_commas(e->value)) {
            try {
                const double x = parse_double(part);
                if (!ok(x)) {
                    fail(*e, key, "element " + std::string(trim(part)) + " out of range " + range);
                    return std::nullopt;
                }
                out.push_back(x);
            } catch (const FormatError&) {
                fail(*e, key, "'" + std::string(trim(part)) + "' is not a number");
                return std::nullopt;
            }
        }
        return out;
    }

    std::optional<std::vector<std::uint64_t>> integers(const std::string& key, std::uint64_t lo, std::uint64_t hi) {
        const auto* e = find(key);
        if (!e) return std::nullopt;
        std::vector<std::uint64_t> out;
        for (const auto& part : split_commas(e->value)) {
            const auto v = parse_integer(std::string(trim(part)));
            if (!v || *v < lo || *v > hi) {
                fail(*e, key,
                     "element '" + std::string(trim(part)) + "' must be an integer in [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
                return std::nullopt;
            }
            out.push_back(*v);
        }
        return out;
    }

    std::optional<std::string> choice(const std::string& key, const std::vector<std::string>& allowed) {
        const auto* e = find(key);
        if (!e) return std::nullopt;
        if (std::find(allowed.begin(), allowed.end(), e->value) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
            fail(*e, key, "value '" + e->value + "' is not one of " + list);
            return std::nullopt;
        }
        return e->value;
    }

    std::optional<std::string> text(const std::string& key) {
        const auto* e = find(key);
        if (!e) return std::nullopt;
        return e->value;
    }

    std::size_t line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    void violation(const std::string& key, const std::string& message) {
        const auto line = line_of(key);
        violations_.push_back((line ? "line " + std::to_string(line) + ": " : std::string()) + "key '" + key + "': " +
                              message);
    }

private:
    const Entry* find(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }
    void fail(const Entry& e, const std::string& key, const std::string& message) {
        const std::string where = e.line ? "line " + std::to_string(e.line) : std::string("override");
        violations_.push_back(where + ": key '" + key + "': " + message);
    }
    static std::optional<std::uint64_t> parse_integer(const std::string& s) {
        const auto t = trim(s);
        if (t.empty()) return std::nullopt;
        std::uint64_t x = 0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) return std::nullopt;
        return x;
    }

    const std::map<std::string, Entry>& entries_;
    std::vector<std::string>& violations_;
};

inline bool positive(double x) { return std::isfinite(x) && x > 0.0; }
inline bool finite(double x) { return std::isfinite(x); }

template <class T>
std::vector<T> broadcast(const std::vector<T>& v, std::size_t dim) {
    if (v.size() == 1 && dim > 1) return std::vector<T>(dim, v.front());
    return v;
}

}  // namespace detail

/// Parses and validates config text. `overrides` are "section.key=value" items applied on
/// top of the text. Throws ConfigError listing every violation.
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
    std::vector<std::string> violations;
    std::map<std::string, detail::Entry> entries;
    std::string section;
    bool section_known = true;

    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view raw(text.data() + start, (end == std::string::npos ? text.size() : end) - start);
        start = end == std::string::npos ? text.size() + 1 : end + 1;
        ++lineno;
        const auto hash = raw.find('#');
        const std::string_view content = raw.substr(0, hash);
        const std::string_view line = detail::trim(content);
        if (line.empty()) continue;
        const std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());
        const std::string where = "line " + std::to_string(lineno) + ", column ";

        if (line.front() == '[') {
            if (line.back() != ']') {
                violations.push_back(where + std::to_string(indent + line.size() + 1) + ": expected ']'");
                section_known = false;
                continue;
            }
            const auto name = detail::trim(line.substr(1, line.size() - 2));
            for (std::size_t i = 0; i < name.size(); ++i) {
                if (!detail::is_name_char(name[i])) {
                    violations.push_back(where + std::to_string(name.data() - raw.data() + i + 1) +
                                         ": invalid character in section name");
                    break;
                }
            }
            section = std::string(name);
            section_known = detail::known_keys().count(section) > 0;
            if (!section_known) violations.push_back("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            violations.push_back(where + std::to_string(indent + line.size() + 1) + ": expected '='");
            continue;
        }
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty()) {
            violations.push_back(where + std::to_string(indent + 1) + ": missing key before '='");
            continue;
        }
        bool bad = false;
        for (std::size_t i = 0; i < key.size(); ++i) {
            if (!detail::is_name_char(key[i])) {
                violations.push_back(where + std::to_string(key.data() - raw.data() + i + 1) +
                                     ": invalid character in key");
                bad = true;
                break;
            }
        }
        if (bad) continue;
        const auto value = detail::trim(line.substr(eq + 1));
        if (value.empty()) {
            violations.push_back(where + std::to_string(indent + eq + 2) + ": missing value for '" + std::string(key) + "'");
            continue;
        }
        if (section.empty()) {
            violations.push_back("line " + std::to_string(lineno) + ": key '" + std::string(key) +
                                 "' appears before any [section]");
            continue;
        }
        if (!section_known) continue;
        const std::string full = section + "." + std::string(key);
        const auto& allowed = detail::known_keys().at(section);
        if (std::find(allowed.begin(), allowed.end(), std::string(key)) == allowed.end()) {
            violations.push_back("line " + std::to_string(lineno) + ": unknown key '" + full + "'");
            continue;
        }
        const auto it = entries.find(full);
        if (it != entries.end()) {
            violations.push_back("line " + std::to_string(lineno) + ": duplicate key '" + full +
                                 "' (first defined at line " + std::to_string(it->second.line) + ")");
            continue;
        }
        entries.emplace(full, detail::Entry{std::string(value), lineno});
    }

    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            violations.push_back("override '" + o + "': expected section.key=value");
            continue;
        }
        const std::string sec(detail::trim(std::string_view(o).substr(0, dot)));
        const std::string key(detail::trim(std::string_view(o).substr(dot + 1, eq - dot - 1)));
        const std::string value(detail::trim(std::string_view(o).substr(eq + 1)));
        const auto ks = detail::known_keys().find(sec);
        if (ks == detail::known_keys().end() || std::find(ks->second.begin(), ks->second.end(), key) == ks->second.end()) {
            violations.push_back("override '" + o + "': unknown key '" + sec + "." + key + "'");
            continue;
        }
        if (value.empty()) {
            violations.push_back("override '" + o + "': missing value");
            continue;
        }
        entries[sec + "." + key] = detail::Entry{value, 0};
    }

    RunConfig c;
    detail::Reader r(entries, violations);
    using detail::finite;
    using detail::positive;

    const std::size_t dim = r.integer("grid.dim", 1, kMaxDim).value_or(entries.count("grid.dim") ? 0 : 2);
    if (dim > 0) {
        auto cells = r.integers("grid.cells", kMinCellsPerAxis, 1u << 20);
        auto lengths = r.numbers("grid.lengths", positive, "(0, inf)");
        std::vector<std::size_t> cv(dim, 32);
        if (cells) {
            const auto b = detail::broadcast(*cells, dim);
            if (b.size() != dim) r.violation("grid.cells", "needs 1 or " + std::to_string(dim) + " entries");
            else cv.assign(b.begin(), b.end());
        }
        std::vector<double> lv(dim, 1.0);
        if (lengths) {
            const auto b = detail::broadcast(*lengths, dim);
            if (b.size() != dim) r.violation("grid.lengths", "needs 1 or " + std::to_string(dim) + " entries");
            else lv = b;
        }
        c.grid.cells = cv;
        c.grid.lengths = lv;
    }

    if (auto x = r.number("model.epsilon", [](double e) { return e > 0.0 && e <= 1.0; }, "(0, 1]")) c.epsilon = *x;
    if (auto x = r.numbers("model.levels", positive, "(0, inf)")) c.levels = *x;

    if (auto x = r.choice("scenario.kind", {"constant", "gaussian", "random-smooth"})) c.scenario.kind = *x;
    if (auto x = r.number("scenario.background", positive, "(0, inf)")) c.scenario.background = *x;
    if (auto x = r.number("scenario.amplitude", finite, "(-inf, inf)")) c.scenario.amplitude = *x;
    if (auto x = r.numbers("scenario.center", finite, "(-inf, inf)")) {
        if (dim > 0 && x->size() != dim) r.violation("scenario.center", "needs " + std::to_string(dim) + " entries");
        else c.scenario.center = *x;
    }
    if (auto x = r.number("scenario.width", positive, "(0, inf)")) c.scenario.width = *x;
    if (auto x = r.number("scenario.v_level", positive, "(0, inf)")) c.scenario.v_level = *x;
    if (auto x = r.number("scenario.v_amplitude", finite, "(-inf, inf)")) c.scenario.v_amplitude = *x;
    if (auto x = r.integer("scenario.modes", 1, 64)) c.scenario.modes = *x;
    if (auto x = r.integer("scenario.seed", 0, UINT64_MAX)) c.scenario.seed = *x;
    if (c.scenario.kind == "gaussian") {
        if (c.scenario.amplitude < 0.0) r.violation("scenario.amplitude", "gaussian amplitude must be >= 0");
        if (c.scenario.v_amplitude < 0.0 || c.scenario.v_amplitude >= c.scenario.v_level) {
            r.violation("scenario.v_amplitude", "gaussian v_amplitude must lie in [0, v_level)");
        }
    }

    if (auto x = r.number("solver.dt", positive, "(0, inf)")) c.solver.dt = *x;
    if (auto x = r.number("solver.t_end", positive, "(0, inf)")) c.solver.t_end = *x;
    if (auto x = r.choice("solver.scheme", {"imex", "explicit"})) {
        c.solver.scheme = *x == "imex" ? Scheme::imex : Scheme::explicit_euler;
    }
    if (auto x = r.number("solver.cfl_safety", [](double s) { return s > 0.0 && s <= 1.0; }, "(0, 1]")) {
        c.solver.cfl_safety = *x;
    }
    if (auto x = r.choice("solver.clamp_policy", {"reject", "none"})) {
        c.solver.clamp_policy = *x == "reject" ? ClampPolicy::reject : ClampPolicy::none;
    }
    if (auto x = r.number("solver.cg_tolerance", [](double t) { return t > 0.0 && t < 1.0; }, "(0, 1)")) {
        c.solver.cg_tolerance = *x;
    }
    if (auto x = r.integer("solver.cg_max_iterations", 1, 100000000)) c.solver.cg_max_iterations = *x;
    if (c.solver.dt > c.solver.t_end) r.violation("solver.dt", "dt must not exceed t_end");

    if (auto x = r.text("output.directory")) c.output_directory = *x;
    if (auto x = r.integer("output.snapshot_cadence", 1, UINT64_MAX)) c.snapshot_cadence = *x;

    if (auto x = r.numbers("study.ladder", positive, "(0, inf)")) c.study.ladder = *x;
    if (auto x = r.number("study.dt_over_h2", positive, "(0, inf)")) c.study.dt_over_h2 = *x;
    if (auto x = r.integer("study.oracle_substeps", 1, 1000000)) c.study.oracle_substeps = *x;
    if (auto x = r.choice("study.parallel", {"true", "false"})) c.study.parallel = *x == "true";
    if (auto x = r.number("study.test_start", [](double s) { return s >= 0.0 && s < 1.0; }, "[0, 1)")) {
        c.study.test_start = *x;
    }
    if (auto x = r.number("study.test_width", [](double s) { return s > 0.0 && s <= 1.0; }, "(0, 1]")) {
        c.study.test_width = *x;
    }
    if (c.study.test_start + c.study.test_width > 1.0) {
        r.violation("study.test_width", "test_start + test_width must not exceed 1");
    }

    if (!violations.empty()) throw ConfigError(std::move(violations));
    return c;
}

namespace detail {

inline std::string join_numbers(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

template <class T>
std::string join_integers(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

}  // namespace detail

/// Canonical text: every key, fixed order, shortest round-trip numbers. parse_config
/// of this text reproduces the config.
inline std::string to_text(const RunConfig& c) {
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) {
        if (!v.empty()) s += k + " = " + v + "\n";
    };
    s += "[grid]\n";
    kv("dim", std::to_string(c.grid.dim()));
    kv("cells", detail::join_integers(c.grid.cells));
    kv("lengths", detail::join_numbers(c.grid.lengths));
    s += "\n[model]\n";
    kv("epsilon", format_double(c.epsilon));
    kv("levels", detail::join_numbers(c.levels));
    s += "\n[scenario]\n";
    kv("kind", c.scenario.kind);
    kv("background", format_double(c.scenario.background));
    kv("amplitude", format_double(c.scenario.amplitude));
    kv("center", detail::join_numbers(c.scenario.center));
    kv("width", format_double(c.scenario.width));
    kv("v_level", format_double(c.scenario.v_level));
    kv("v_amplitude", format_double(c.scenario.v_amplitude));
    kv("modes", std::to_string(c.scenario.modes));
    kv("seed", std::to_string(c.scenario.seed));
    s += "\n[solver]\n";
    kv("dt", format_double(c.solver.dt));
    kv("t_end", format_double(c.solver.t_end));
    kv("scheme", to_string(c.solver.scheme));
    kv("cfl_safety", format_double(c.solver.cfl_safety));
    kv("clamp_policy", to_string(c.solver.clamp_policy));
    kv("cg_tolerance", format_double(c.solver.cg_tolerance));
    kv("cg_max_iterations", std::to_string(c.solver.cg_max_iterations));
    s += "\n[output]\n";
    kv("directory", c.output_directory);
    kv("snapshot_cadence", std::to_string(c.snapshot_cadence));
    s += "\n[study]\n";
    kv("ladder", detail::join_numbers(c.study.ladder));
    kv("dt_over_h2", format_double(c.study.dt_over_h2));
    kv("oracle_substeps", std::to_string(c.study.oracle_substeps));
    kv("parallel", c.study.parallel ? "true" : "false");
    kv("test_start", format_double(c.study.test_start));
    kv("test_width", format_double(c.study.test_width));
    return s;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// Content hash of the canonical config text; the output directory is excluded so that
/// moving a run does not change its identity.
inline std::string config_hash(const RunConfig& c) {
    RunConfig k = c;
    k.output_directory.clear();
    return hex64(fnv1a64(to_text(k)));
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

}  // namespace rclab::io
