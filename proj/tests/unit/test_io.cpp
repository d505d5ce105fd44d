#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "rclab/io/config.hpp"
#include "rclab/io/csv.hpp"
#include "rclab/io/manifest.hpp"
#include "rclab/io/snapshot.hpp"

using namespace rclab;
using namespace rclab::io;

namespace {

std::vector<std::string> violations_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_config(text, overrides);
    } catch (const ConfigError& e) {
        return e.violations();
    }
    return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("rclab-io-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST(Config, DefaultsFromEmptyText) {
    const auto c = parse_config("");
    EXPECT_EQ(c.grid.cells, (std::vector<std::size_t>{32, 32}));
    EXPECT_EQ(c.epsilon, 0.5);
    EXPECT_EQ(c.scenario.kind, "gaussian");
    EXPECT_EQ(c.family().levels().size(), 10u);
}

TEST(Config, ParsesSectionsCommentsAndBroadcast) {
    const auto c = parse_config(
        "# header\n"
        "[grid]\n"
        "dim = 3   # trailing\n"
        "cells = 8\n"
        "lengths = 1, 2, 0.5\n"
        "\n"
        "[model]\n"
        "epsilon = 0.25\n"
        "levels = 2, 4, 8\n"
        "[scenario]\n"
        "kind = random-smooth\n"
        "seed = 7\n"
        "[solver]\n"
        "scheme = explicit\n"
        "clamp_policy = none\n"
        "[study]\n"
        "parallel = false\n");
    EXPECT_EQ(c.grid.cells, (std::vector<std::size_t>{8, 8, 8}));
    EXPECT_EQ(c.grid.lengths, (std::vector<double>{1, 2, 0.5}));
    EXPECT_EQ(c.epsilon, 0.25);
    EXPECT_EQ(c.levels, (std::vector<double>{2, 4, 8}));
    EXPECT_EQ(c.scenario.seed, 7u);
    EXPECT_EQ(c.solver.scheme, Scheme::explicit_euler);
    EXPECT_EQ(c.solver.clamp_policy, ClampPolicy::none);
    EXPECT_FALSE(c.study.parallel);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
    const auto v = violations_of("[grid]\n  cells 8\n[model\n = 3\n");
    EXPECT_TRUE(mentions(v, "line 2, column 10: expected '='"));
    EXPECT_TRUE(mentions(v, "line 3, column 7: expected ']'"));
    EXPECT_TRUE(mentions(v, "line 4, column 2: missing key before '='"));
}

TEST(Config, CollectsEverySemanticViolation) {
    const auto v = violations_of(
        "[grid]\n"
        "dim = 2\n"
        "cells = 2\n"
        "[model]\n"
        "epsilon = 1.5\n"
        "[nope]\n"
        "x = 1\n"
        "[solver]\n"
        "dt = 0.5\n"
        "t_end = 0.1\n"
        "dt = 0.2\n"
        "color = red\n"
        "scheme = rk4\n");
    EXPECT_TRUE(mentions(v, "line 5: key 'model.epsilon': value 1.5 out of range (0, 1]"));
    EXPECT_TRUE(mentions(v, "unknown section [nope]"));
    EXPECT_TRUE(mentions(v, "duplicate key 'solver.dt' (first defined at line 9)"));
    EXPECT_TRUE(mentions(v, "unknown key 'solver.color'"));
    EXPECT_TRUE(mentions(v, "'rk4' is not one of imex|explicit"));
    EXPECT_TRUE(mentions(v, "dt must not exceed t_end"));
    EXPECT_TRUE(mentions(v, "grid.cells"));
    EXPECT_GE(v.size(), 7u);
}

TEST(Config, CrossFieldChecks) {
    EXPECT_TRUE(mentions(violations_of("[scenario]\nv_amplitude = 1.0\n"), "v_amplitude"));
    EXPECT_TRUE(mentions(violations_of("[study]\ntest_start = 0.6\ntest_width = 0.6\n"), "test_start + test_width"));
    EXPECT_TRUE(mentions(violations_of("[grid]\ndim = 2\n[scenario]\ncenter = 0.5\n"), "scenario.center"));
    EXPECT_TRUE(mentions(violations_of("x = 1\n"), "before any [section]"));
    EXPECT_TRUE(mentions(violations_of("[grid]\ndim = 9\n"), "grid.dim"));
}

TEST(Config, Overrides) {
    const auto c = parse_config("[model]\nepsilon = 0.5\n", {"model.epsilon=0.125", "grid.cells = 16"});
    EXPECT_EQ(c.epsilon, 0.125);
    EXPECT_EQ(c.grid.cells, (std::vector<std::size_t>{16, 16}));
    EXPECT_TRUE(mentions(violations_of("", {"model.eps=1"}), "unknown key 'model.eps'"));
    EXPECT_TRUE(mentions(violations_of("", {"garbage"}), "expected section.key=value"));
    EXPECT_TRUE(mentions(violations_of("", {"model.epsilon=2"}), "override: key 'model.epsilon'"));
}

TEST(Config, CanonicalTextRoundTripsAndHashes) {
    auto c = parse_config("[grid]\ndim = 1\ncells = 40\n[model]\nepsilon = 0.1\nlevels = 2, 4\n[scenario]\ncenter = 0.3\n");
    const auto text = to_text(c);
    const auto d = parse_config(text);
    EXPECT_EQ(to_text(d), text);
    EXPECT_EQ(config_hash(c), config_hash(d));
    EXPECT_EQ(config_hash(c).size(), 16u);
    c.output_directory = "/somewhere/else";
    EXPECT_EQ(config_hash(c), config_hash(d));
    c.epsilon = 0.2;
    EXPECT_NE(config_hash(c), config_hash(d));
}

TEST(Config, Fnv1aReferenceValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
    EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Config, StudyPlanDefaults) {
    const auto c = parse_config("[solver]\ndt = 0.01\nt_end = 0.1\n");
    EXPECT_EQ(c.study_plan(StudyKind::epsilon).ladder, (std::vector<double>{1, 0.5, 0.25, 0.125}));
    EXPECT_EQ(c.study_plan(StudyKind::truncation).ladder.back(), 1024.0);
    EXPECT_EQ(c.study_plan(StudyKind::refinement).ladder, (std::vector<double>{16, 32, 64}));
    EXPECT_EQ(c.study_plan(StudyKind::oracle).ladder, (std::vector<double>{0.01, 0.005, 0.0025}));
    for (auto k : {StudyKind::epsilon, StudyKind::truncation, StudyKind::refinement, StudyKind::oracle})
        EXPECT_NO_THROW(c.study_plan(k).validate());
}

TEST(Csv, ExactRoundTrip) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    CsvTable t{{"a", "b", "c"}, {}};
    for (int i = 0; i < 200; ++i) t.rows.push_back({d(gen), std::ldexp(d(gen), -900), d(gen) * 1e300});
    t.rows.push_back({0.0, -0.0, 5e-324});
    t.rows.push_back({std::numeric_limits<double>::infinity(), std::numeric_limits<double>::max(), 1.0});
    const auto back = parse_csv(to_csv(t));
    EXPECT_EQ(back.columns, t.columns);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_EQ(std::bit_cast<std::uint64_t>(back.rows[i][j]), std::bit_cast<std::uint64_t>(t.rows[i][j]));
    const auto nan_row = parse_csv("x\nnan\n");
    EXPECT_TRUE(std::isnan(nan_row.rows[0][0]));
}

TEST(Csv, Errors) {
    EXPECT_THROW(parse_csv(""), FormatError);
    EXPECT_THROW(parse_csv("a,b\n1\n"), FormatError);
    EXPECT_THROW(parse_csv("a\nx1\n"), FormatError);
    EXPECT_THROW(to_csv(CsvTable{{"a"}, {{1.0, 2.0}}}), DimensionMismatch);
    EXPECT_THROW(CsvTable{}.column("q"), FormatError);
    EXPECT_EQ(parse_double(" +2.5\r"), 2.5);
    EXPECT_THROW(parse_double("2.5x"), FormatError);
}

TEST(Csv, DiagnosticsRoundTrip) {
    std::vector<DiagnosticsRecord> recs(3);
    for (std::size_t k = 0; k < 3; ++k) {
        recs[k].step = k;
        recs[k].time = 0.1 * static_cast<double>(k);
        recs[k].energy = -1.0 / 3.0 * static_cast<double>(k);
        recs[k].u_pow = 1e-17;
    }
    const auto text = to_csv(diagnostics_table(recs));
    const auto back = parse_diagnostics_csv(text);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(record_values(back[k]), record_values(recs[k]));
    auto bad = text;
    bad.replace(bad.find("energy"), 6, "enargy");
    EXPECT_THROW(parse_diagnostics_csv(bad), FormatError);
    EXPECT_THROW(parse_diagnostics_csv("step,time\n0,0\n"), FormatError);
}

TEST(Snapshot, RoundTripIsBitExact) {
    Snapshot s{0.125, {3, 4}, {std::vector<double>(12), std::vector<double>(12)}};
    for (std::size_t i = 0; i < 12; ++i) {
        s.fields[0][i] = std::sqrt(static_cast<double>(i)) / 3.0;
        s.fields[1][i] = -std::exp(-static_cast<double>(i));
    }
    const auto bytes = encode_snapshot(s);
    EXPECT_EQ(bytes.size(), 5u + 2u + 16u + 8u + 1u + 2u * 12u * 8u);
    EXPECT_EQ(bytes.substr(0, 5), "RCLB1");
    const auto back = decode_snapshot(bytes);
    EXPECT_EQ(back.time, s.time);
    EXPECT_EQ(back.cells, s.cells);
    EXPECT_EQ(back.fields, s.fields);

    const auto dir = scratch("snap");
    write_snapshot((dir / "a.rclb").string(), s);
    EXPECT_EQ(read_snapshot((dir / "a.rclb").string()).fields, s.fields);
}

TEST(Snapshot, LittleEndianLayout) {
    const Snapshot s{1.0, {3}, {{1.0, 2.0, 3.0}}};
    const auto b = encode_snapshot(s);
    EXPECT_EQ(static_cast<unsigned char>(b[5]), 1u);  // version
    EXPECT_EQ(static_cast<unsigned char>(b[6]), 1u);  // dim
    EXPECT_EQ(static_cast<unsigned char>(b[7]), 3u);  // low byte of cell count
    EXPECT_EQ(static_cast<unsigned char>(b[8]), 0u);
    // time = 1.0 = 0x3ff0000000000000, high bytes last
    EXPECT_EQ(static_cast<unsigned char>(b[15 + 7]), 0x3fu);
    EXPECT_EQ(static_cast<unsigned char>(b[15 + 6]), 0xf0u);
}

TEST(Snapshot, CorruptionIsDetected) {
    const Snapshot s{0.5, {3, 3}, {std::vector<double>(9, 1.0), std::vector<double>(9, 2.0)}};
    const auto good = encode_snapshot(s);
    auto expect_error = [](const std::string& bytes, const std::string& needle) {
        try {
            decode_snapshot(bytes);
            ADD_FAILURE() << "no error for " << needle;
        } catch (const FormatError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error("", "truncated");
    expect_error("XXXXX" + good.substr(5), "bad magic");
    auto v = good;
    v[5] = 9;
    expect_error(v, "unsupported format version 9");
    auto d = good;
    d[6] = 7;
    expect_error(d, "dimension 7");
    expect_error(good.substr(0, good.size() - 1), "payload");
    expect_error(good + "x", "payload");
    auto nf = good;
    nf[5 + 2 + 16 + 8] = 0;
    expect_error(nf, "no fields");
    expect_error(good.substr(0, 10), "truncated");
    EXPECT_THROW(encode_snapshot(Snapshot{0.0, {3}, {{1.0}}}), DimensionMismatch);
    EXPECT_THROW(encode_snapshot(Snapshot{0.0, {}, {{1.0}}}), InvalidArgument);
}

TEST(Snapshot, FrameConversion) {
    const auto g = make_grid(TensorGrid({3, 4}, {1.0, 1.0}));
    const Frame f{0.25, 7, ScalarField(g, 1.5), ScalarField(g, 0.5)};
    const auto back = frame_of(snapshot_of(f), g, 7);
    EXPECT_EQ(back.time, 0.25);
    EXPECT_EQ(back.u.storage(), f.u.storage());
    EXPECT_EQ(back.v.storage(), f.v.storage());
    const auto other = make_grid(TensorGrid({4, 3}, {1.0, 1.0}));
    EXPECT_THROW(frame_of(snapshot_of(f), other), DimensionMismatch);
}

TEST(ManifestT, JsonRoundTripKeepsNonFiniteValues) {
    Manifest m;
    m.command = "run";
    m.config_hash = "0123456789abcdef";
    m.config_text = "[grid]\ndim = 1\n";
    m.timings = {{"total", 1.5}};
    m.outputs = {"diagnostics.csv"};
    m.checks = {{"a", true, 1e-15, 1e-12, "ok"},
                {"b", false, std::numeric_limits<double>::infinity(), 0.0, "bad"},
                {"c", true, std::numeric_limits<double>::quiet_NaN(), 1.0, ""}};
    m.extra["steps"] = 10;
    EXPECT_FALSE(m.passed());
    const auto dir = scratch("manifest");
    write_manifest((dir / "manifest.json").string(), m);
    const auto back = read_manifest((dir / "manifest.json").string());
    EXPECT_EQ(back.command, "run");
    EXPECT_EQ(back.config_hash, m.config_hash);
    EXPECT_EQ(back.config_text, m.config_text);
    ASSERT_EQ(back.checks.size(), 3u);
    EXPECT_EQ(back.checks[0].value, 1e-15);
    EXPECT_TRUE(std::isinf(back.checks[1].value));
    EXPECT_TRUE(std::isnan(back.checks[2].value));
    EXPECT_EQ(back.extra["steps"], 10);
    const auto j = to_json(m);
    EXPECT_EQ(j["tool"], "rclab");
    EXPECT_EQ(j["passed"], false);
}

TEST(ManifestT, MalformedInput) {
    const auto dir = scratch("manifest-bad");
    write_text_file((dir / "m.json").string(), "{not json");
    EXPECT_THROW(read_manifest((dir / "m.json").string()), FormatError);
    write_text_file((dir / "m.json").string(), "{\"tool\": \"other\"}");
    EXPECT_THROW(read_manifest((dir / "m.json").string()), FormatError);
    write_text_file((dir / "m.json").string(), "{\"tool\": \"rclab\"}");
    EXPECT_THROW(read_manifest((dir / "m.json").string()), FormatError);
    EXPECT_THROW(read_manifest((dir / "missing.json").string()), FormatError);
}
