#pragma once

// Numeric CSV tables with shortest round-trip decimal formatting.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rclab/diagnostics.hpp"
#include "rclab/error.hpp"

namespace rclab::io {

inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc{}) throw FormatError("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("not a number: '" + std::string(s) + "'");
    }
    return x;
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) return j;
        throw FormatError("csv: missing column '" + name + "'");
    }
    std::vector<double> column(const std::string& name) const {
        const auto j = column_index(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[j]);
        return out;
    }
};

inline std::vector<std::string> split_commas(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string to_csv(const CsvTable& t) {
    std::string s;
    for (std::size_t j = 0; j < t.columns.size(); ++j) s += (j ? "," : "") + t.columns[j];
    s += '\n';
    for (const auto& r : t.rows) {
        if (r.size() != t.columns.size()) throw DimensionMismatch("csv: row width differs from header");
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) s += ',';
            s += format_double(r[j]);
        }
        s += '\n';
    }
    return s;
}

inline CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    CsvTable t;
    if (!std::getline(in, line)) throw FormatError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.columns = split_commas(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != t.columns.size()) {
            throw FormatError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " fields, header has " + std::to_string(t.columns.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot write '" + path + "'");
    f << text;
    if (!f) throw FormatError("write failed for '" + path + "'");
}

inline CsvTable diagnostics_table(std::span<const DiagnosticsRecord> records) {
    CsvTable t;
    t.columns.assign(kDiagnosticsColumns.begin(), kDiagnosticsColumns.end());
    for (const auto& r : records) {
        const auto v = record_values(r);
        t.rows.emplace_back(v.begin(), v.end());
    }
    return t;
}

/// Parses a diagnostics CSV; the header must be exactly the documented column order.
inline std::vector<DiagnosticsRecord> parse_diagnostics_csv(const std::string& text) {
    const CsvTable t = parse_csv(text);
    if (t.columns.size() != kDiagnosticsColumns.size()) throw FormatError("diagnostics csv: wrong column count");
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
        if (t.columns[j] != kDiagnosticsColumns[j]) {
            throw FormatError("diagnostics csv: column " + std::to_string(j) + " is '" + t.columns[j] + "', expected '" +
                              kDiagnosticsColumns[j] + "'");
        }
    }
    std::vector<DiagnosticsRecord> out;
    for (const auto& r : t.rows) out.push_back(record_from_values(r));
    return out;
}

}  // namespace rclab::io
