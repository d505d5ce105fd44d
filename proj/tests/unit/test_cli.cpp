#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "rclab/cli.hpp"

using namespace rclab;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "rclab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("rclab-cli-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const char* kSmallRun =
    "[grid]\n"
    "dim = 2\n"
    "cells = 12\n"
    "[model]\n"
    "epsilon = 0.5\n"
    "levels = 2, 4, 8, 16\n"
    "[scenario]\n"
    "kind = gaussian\n"
    "center = 0.35, 0.42\n"
    "amplitude = 3\n"
    "v_amplitude = 0.5\n"
    "[solver]\n"
    "dt = 5e-4\n"
    "t_end = 0.02\n";

/// Writes the config and runs it once; returns the run directory.
fs::path run_once(const fs::path& root, const std::string& text, Result& r) {
    const auto cfg = root / "run.cfg";
    io::write_text_file(cfg.string(), text);
    r = invoke({"run", "-c", cfg.string(), "-o", (root / "out").string()});
    return root / "out" / ("run-" + io::config_hash(io::parse_config(text)));
}

}  // namespace

TEST(Cli, HomogeneousRunPassesAndWritesOutputs) {
    const auto root = scratch("homogeneous");
    Result r{};
    const auto dir = run_once(root, "[grid]\ndim = 1\ncells = 16\n[scenario]\nkind = constant\nbackground = 2\n"
                                    "[solver]\ndt = 1e-3\nt_end = 0.05\n", r);
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("PASS mass conservation"), std::string::npos);
    for (const char* f : {"manifest.json", "diagnostics.csv", "defect.csv", "levels.csv", "residuals.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto m = io::read_manifest((dir / "manifest.json").string());
    EXPECT_TRUE(m.passed());
    EXPECT_EQ(m.command, "run");
    const auto diag = io::parse_diagnostics_csv(io::read_text_file((dir / "diagnostics.csv").string()));
    EXPECT_EQ(diag.size(), 51u);
}

TEST(Cli, AuditPassesThenCatchesTampering) {
    const auto root = scratch("audit");
    Result r{};
    const auto dir = run_once(root, kSmallRun, r);
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    const auto cfg = (root / "run.cfg").string();

    const auto ok = invoke({"audit", "-c", cfg, "-d", dir.string()});
    EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
    EXPECT_NE(ok.out.find("PASS residual reproduction"), std::string::npos) << ok.out;

    const auto mismatch = invoke({"audit", "-c", cfg, "-d", dir.string(), "-s", "model.epsilon=0.25"});
    EXPECT_EQ(mismatch.code, 2);
    EXPECT_NE(mismatch.err.find("refusing"), std::string::npos);

    // raise u in one cell of the last snapshot: mass is no longer conserved
    fs::path last;
    for (const auto& e : fs::directory_iterator(dir / "snapshots"))
        if (last.empty() || e.path() > last) last = e.path();
    auto snap = io::read_snapshot(last.string());
    snap.fields[0][5] *= 1.1;
    io::write_snapshot(last.string(), snap);
    const auto bad = invoke({"audit", "-c", cfg, "-d", dir.string()});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("FAIL mass conservation"), std::string::npos) << bad.out;

    // truncated file
    const auto bytes = io::read_text_file(last.string());
    io::write_text_file(last.string(), bytes.substr(0, bytes.size() / 2));
    const auto broken = invoke({"audit", "-c", cfg, "-d", dir.string()});
    EXPECT_EQ(broken.code, 1);
    EXPECT_NE(broken.out.find("FAIL snapshot integrity"), std::string::npos) << broken.out;
}

TEST(Cli, ConfigErrorsExitWithUsageCode) {
    const auto root = scratch("badcfg");
    const auto cfg = root / "bad.cfg";
    io::write_text_file(cfg.string(), "[model]\nepsilon = 3\n[solver]\nscheme = magic\n");
    const auto r = invoke({"run", "-c", cfg.string(), "-o", (root / "out").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("model.epsilon"), std::string::npos);
    EXPECT_NE(r.err.find("solver.scheme"), std::string::npos);
    EXPECT_FALSE(fs::exists(root / "out"));

    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    EXPECT_EQ(invoke({"run", "-c", (root / "missing.cfg").string()}).code, 2);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, InvalidPlanExitsWithUsageCode) {
    const auto root = scratch("badplan");
    const auto cfg = root / "p.cfg";
    io::write_text_file(cfg.string(), "[study]\nladder = 0.25, 0.5\n");
    const auto r = invoke({"sweep-eps", "-c", cfg.string(), "-o", (root / "out").string()});
    EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Cli, VerifyTruncationTable) {
    const auto r = invoke({"verify-truncation", "-l", "2,4,8,16,32,64,128"});
    EXPECT_EQ(r.code, 0) << r.out;
    for (const char* a : {"E1", "E2", "E3", "E4", "E5", "E6", "E7"}) EXPECT_NE(r.out.find(a), std::string::npos) << a;
    EXPECT_NE(r.out.find("PASS verify-truncation"), std::string::npos);
    const auto step = invoke({"verify-truncation", "-l", "2,4", "-p", "step"});
    EXPECT_EQ(step.code, 1);
    EXPECT_EQ(invoke({"verify-truncation", "-p", "wiggly"}).code, 2);
}

TEST(Cli, StudyAndReportData) {
    const auto root = scratch("study");
    const auto cfg = root / "s.cfg";
    io::write_text_file(cfg.string(), std::string(kSmallRun) + "[study]\nladder = 2, 4, 8, 16\n");
    const auto r = invoke({"sweep-trunc", "-c", cfg.string(), "-o", (root / "out").string()});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    const auto dir = root / "out" / ("sweep-trunc-" + io::config_hash(io::load_config(cfg.string())));
    ASSERT_TRUE(fs::exists(dir / "verdict.csv"));
    const auto summary = io::read_text_file((dir / "verdict_summary.csv").string());
    EXPECT_NE(summary.find("flag,nu_partition,1"), std::string::npos) << summary;
    EXPECT_NE(summary.find("verdict,passed,1"), std::string::npos);

    const auto rep = invoke({"report-data", "-d", dir.string(), "--out", (root / "flat.csv").string()});
    EXPECT_EQ(rep.code, 0) << rep.err;
    const auto flat = io::read_text_file((root / "flat.csv").string());
    EXPECT_EQ(flat.rfind("source,row,column,value\n", 0), 0u);
    EXPECT_NE(flat.find("verdict.csv,0,level,2\n"), std::string::npos) << flat.substr(0, 400);
    EXPECT_NE(flat.find("verdict_summary.csv,"), std::string::npos);
}

TEST(Cli, OutputRootPrecedence) {
    auto c = io::parse_config("");
    EXPECT_EQ(cli::detail::output_root(c, "/x").string(), "/x");
    c.output_directory = "/from-config";
    EXPECT_EQ(cli::detail::output_root(c, "").string(), "/from-config");
    EXPECT_EQ(cli::detail::run_directory(c, "run", "/r").string(), "/r/run-" + io::config_hash(c));
}
