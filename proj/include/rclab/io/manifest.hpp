#pragma once

// Run manifest: config hash, versions, timings, checks and output files, as JSON.

#include <json.hpp>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rclab/error.hpp"
#include "rclab/io/config.hpp"
#include "rclab/io/csv.hpp"
#include "rclab/io/snapshot.hpp"

namespace rclab::io {

inline constexpr const char* kToolName = "rclab";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kManifestVersion = 1;

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct Manifest {
    std::string command;
    std::string config_hash;
    std::string config_text;
    std::vector<std::pair<std::string, double>> timings;  // seconds
    std::vector<std::string> outputs;                     // paths relative to the run directory
    std::vector<Check> checks;
    nlohmann::json extra = nlohmann::json::object();

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

namespace detail {

/// JSON has no NaN or infinity; those are written as strings.
inline nlohmann::json json_number(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

inline double number_of(const nlohmann::json& j) {
    if (j.is_string()) return parse_double(j.get<std::string>());
    return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const Manifest& m) {
    nlohmann::json j;
    j["tool"] = kToolName;
    j["tool_version"] = kToolVersion;
    j["manifest_version"] = kManifestVersion;
    j["snapshot_format_version"] = kSnapshotVersion;
    j["compiler"] = __VERSION__;
    j["cxx_standard"] = __cplusplus;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["config"] = m.config_text;
    j["timings"] = nlohmann::json::object();
    for (const auto& [k, v] : m.timings) j["timings"][k] = v;
    j["outputs"] = m.outputs;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : m.checks) {
        j["checks"].push_back(
            {{"name", c.name}, {"passed", c.passed}, {"value", detail::json_number(c.value)}, {"tolerance", detail::json_number(c.tolerance)}, {"detail", c.detail}});
    }
    j["passed"] = m.passed();
    j["extra"] = m.extra;
    return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    try {
        Manifest m;
        if (j.at("tool").get<std::string>() != kToolName) throw FormatError("manifest: not an rclab manifest");
        if (j.at("manifest_version").get<int>() != kManifestVersion) throw FormatError("manifest: unsupported version");
        m.command = j.at("command").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.config_text = j.at("config").get<std::string>();
        for (const auto& [k, v] : j.at("timings").items()) m.timings.emplace_back(k, v.get<double>());
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        for (const auto& c : j.at("checks")) {
            m.checks.push_back(Check{c.at("name").get<std::string>(), c.at("passed").get<bool>(),
                                     detail::number_of(c.at("value")), detail::number_of(c.at("tolerance")),
                                     c.at("detail").get<std::string>()});
        }
        if (j.contains("extra")) m.extra = j.at("extra");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

inline void write_manifest(const std::string& path, const Manifest& m) {
    write_text_file(path, to_json(m).dump(2) + "\n");
}

inline Manifest read_manifest(const std::string& path) {
    try {
        return manifest_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

}  // namespace rclab::io
