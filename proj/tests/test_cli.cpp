#include "cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace noisegate;
namespace fs = std::filesystem;

namespace {

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "noisegate");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell.empty() ? NAN : std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("noisegate_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

} // namespace

TEST(CliNumbers, TwelveSignificantDigitsWithDotDecimal) {
    EXPECT_EQ(cli::num(1234567.891234567), "1234567.89123");
    EXPECT_EQ(cli::num(0.1), "0.1");
    EXPECT_EQ(cli::num(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(cli::num(2.5e-10), "2.5e-10");
}

TEST(CliMfpt, ReferenceGateGivesFinitePositiveTimes) {
    cli::RunConfig cfg;
    const auto r = cli::mfpt_report(cfg);
    EXPECT_GT(r["t1_over_tau"].get<double>(), 0.0);
    EXPECT_GT(r["t2_over_tau"].get<double>(), 0.0);
    EXPECT_TRUE(std::isfinite(r["t2_over_tau"].get<double>()));
    EXPECT_EQ(r["normalization_mode"], "as-derived");
    EXPECT_EQ(r["regime"], "supra");
    EXPECT_NEAR(r["b_e_bar"].get<double>(), -0.2 / std::sqrt(2.0), 1e-14);
}

TEST(CliMfpt, DoublingTauDoublesT1) {
    cli::RunConfig cfg;
    const double a = cli::mfpt_report(cfg)["t1_s"].get<double>();
    cfg.tau *= 2.0;
    EXPECT_DOUBLE_EQ(cli::mfpt_report(cfg)["t1_s"].get<double>(), 2.0 * a);
}

TEST(CliMfpt, MissingLowerThresholdIsAConfigError) {
    const auto r = run({"mfpt", "--preset", "none", "--bu", "4", "--iu", "4.2"});
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("--bd"), std::string::npos);
    EXPECT_EQ(run({"mfpt", "--preset", "none", "--bu", "4", "--iu", "4.2", "--what", "t1"}).status, 0);
}

TEST(CliMfpt, CsvHasHeaderAndOneRow) {
    const auto r = run({"mfpt"});
    ASSERT_EQ(r.status, 0);
    std::string header;
    std::istringstream is(r.out);
    std::getline(is, header);
    EXPECT_NE(header.find("t1_over_tau"), std::string::npos);
    EXPECT_NE(header.find("normalization_mode"), std::string::npos);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST(CliErrors, BadArgumentsExitWithConfigError) {
    EXPECT_EQ(run({"mfpt", "--no-such-flag"}).status, 2);
    EXPECT_EQ(run({"mfpt", "--format", "xml"}).status, 2);
    EXPECT_EQ(run({"mfpt", "--normalization", "other"}).status, 2);
    EXPECT_EQ(run({"curve", "--points", "1"}).status, 2);
    EXPECT_EQ(run({"curve", "--iu", "4.0"}).status, 2);
    EXPECT_EQ(run({"curve", "--sigma", "-1"}).status, 2);
    EXPECT_EQ(run({}).status, 2);
    EXPECT_EQ(run({"--help"}).status, 0);
}

TEST_F(TempDir, CurveRowsAndSidecar) {
    const auto out = path("curve.csv");
    ASSERT_EQ(run({"curve", "--out", out, "--points", "201"}).status, 0);
    std::string header;
    const auto rows = parse_csv(slurp(out), &header);
    EXPECT_EQ(header, "t_over_tau,p1,p2,pe");
    ASSERT_EQ(rows.size(), 201u);
    EXPECT_EQ(rows[0][0], 0.0);
    EXPECT_EQ(rows[0][2], 0.0);
    for (const auto& r : rows) EXPECT_NEAR(r[3], r[1] + r[2], 2e-12 * std::max(1.0, r[3]));

    const auto side = cli::json::parse(slurp(path("curve.json")));
    EXPECT_EQ(side["eps"], 0.3);
    const double tw = side["t_w_over_tau"];
    const double tm = side["t_m_over_tau"];
    const double th = side["t_h_over_tau"];
    EXPECT_LT(tw, tm);
    EXPECT_LT(tm, th);
    EXPECT_NEAR(side["seconds"]["t_m"].get<double>(), tm * 1e-9, 1e-20);
    ASSERT_TRUE(side["window"].is_object());
}

TEST_F(TempDir, CurveIsByteStableAcrossRuns) {
    ASSERT_EQ(run({"curve", "--out", path("a.csv")}).status, 0);
    ASSERT_EQ(run({"curve", "--out", path("b.csv")}).status, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST(CliCurve, JsonFormatCarriesArraysAndTiming) {
    const auto r = run({"curve", "--format", "json", "--points", "11"});
    ASSERT_EQ(r.status, 0);
    const auto j = cli::json::parse(r.out);
    EXPECT_EQ(j["pe"].size(), 11u);
    EXPECT_TRUE(j.contains("t_w_over_tau"));
}

TEST(CliSweep, DefaultEpsilonsAndRowOrdering) {
    cli::RunConfig cfg;
    EXPECT_EQ(cfg.eps_list, (std::vector<double>{1e-1, 1e-3, 1e-5, 1e-7}));
    const auto rows = cli::sweep_rows(cfg);
    ASSERT_EQ(rows.size(), cfg.ratios.size() * 4);
    for (std::size_t i = 0; i < rows.size(); i += 4) {
        for (std::size_t k = 1; k < 4; ++k) {
            EXPECT_EQ(rows[i + k].sigma_over_be, rows[i].sigma_over_be);
            EXPECT_GT(rows[i + k].t_w_over_tau, rows[i + k - 1].t_w_over_tau);
        }
    }
}

TEST(CliSweep, MonteCarloWaitTimeNearModelAtTenPercent) {
    cli::RunConfig cfg;
    cfg.ratios = {5.0, 10.0, 20.0};
    cfg.eps_list = {0.1};
    cfg.mc = true;
    cfg.paths = 50000;
    cfg.workers = 1;
    for (const auto& r : cli::sweep_rows(cfg)) {
        ASSERT_TRUE(r.t_w_mc_over_tau) << r.sigma_over_be;
        EXPECT_NEAR(*r.t_w_mc_over_tau / r.t_w_over_tau, 1.0, 0.05) << r.sigma_over_be;
    }
}

TEST(CliSweep, CsvColumns) {
    const auto r = run({"sweep", "--ratios", "2,4"});
    ASSERT_EQ(r.status, 0);
    std::string header;
    const auto rows = parse_csv(r.out, &header);
    EXPECT_EQ(header, "sigma_over_be,eps,t_w_over_tau");
    EXPECT_EQ(rows.size(), 8u);
}

TEST(CliValidate, TooFewPathsIsInconclusive) {
    const auto r = run({"validate", "--paths", "10"});
    EXPECT_EQ(r.status, 3);
    EXPECT_NE(r.out.find("insufficient samples"), std::string::npos);
}

TEST(CliValidate, OracleChecksPassOnDefaultConfig) {
    cli::RunConfig cfg;
    cfg.paths = 20000;
    cfg.workers = 1;
    const auto rep = cli::run_validation(cfg);
    for (const auto& c : rep.checks) {
        if (c.name == "t1_oracle" || c.name == "t2_oracle") {
            EXPECT_EQ(c.status, cli::CheckStatus::pass) << c.detail;
        }
        if (c.name == "normalization") {
            EXPECT_NE(c.detail.find("supports as-derived"), std::string::npos);
        }
    }
}

TEST(CliValidate, PrintedNormalizationIsFlagged) {
    const auto r = run({"validate", "--paths", "20000", "--normalization", "as-printed", "--workers", "1"});
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("FAIL t1_oracle"), std::string::npos);
}

TEST_F(TempDir, TraceWithoutNoiseHasOneEdge) {
    ASSERT_EQ(run({"trace", "--sigma", "0", "--out", path("t")}).status, 0);
    const auto ev = cli::json::parse(slurp(path("t_events.json")));
    ASSERT_EQ(ev["clean"].size(), 1u);
    ASSERT_EQ(ev["noisy"].size(), 1u);
    EXPECT_EQ(ev["clean"][0]["kind"], "high_to_low");
    EXPECT_EQ(slurp(path("t_clean.csv")), slurp(path("t_noisy.csv")));
}

TEST_F(TempDir, SeededTraceIsStableAndConsistent) {
    ASSERT_EQ(run({"trace", "--seed", "7", "--out", path("a")}).status, 0);
    ASSERT_EQ(run({"trace", "--seed", "7", "--out", path("b")}).status, 0);
    ASSERT_EQ(run({"trace", "--seed", "8", "--out", path("c")}).status, 0);
    EXPECT_EQ(slurp(path("a_noisy.csv")), slurp(path("b_noisy.csv")));
    EXPECT_EQ(slurp(path("a_events.json")), slurp(path("b_events.json")));
    EXPECT_NE(slurp(path("a_noisy.csv")), slurp(path("c_noisy.csv")));

    std::string header;
    const auto rows = parse_csv(slurp(path("a_noisy.csv")), &header);
    EXPECT_EQ(header, "time_s,input_v,output_v");
    std::size_t transitions = 0;
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k][2] != rows[k - 1][2]) ++transitions;
    const auto ev = cli::json::parse(slurp(path("a_events.json")));
    EXPECT_EQ(transitions, ev["noisy"].size());
}

TEST_F(TempDir, ConfigFileIsOverriddenByFlags) {
    {
        std::ofstream f(path("run.conf"));
        f << "sigma = 2.0\ntau = 2e-9\nwhat = t1\n";
    }
    auto r = run({"mfpt", "--config", path("run.conf"), "--format", "json"});
    ASSERT_EQ(r.status, 0) << r.err;
    auto j = cli::json::parse(r.out);
    EXPECT_NEAR(j["b_e_bar"].get<double>(), -0.2 / (2.0 * std::sqrt(2.0)), 1e-14);
    EXPECT_FALSE(j.contains("t2_over_tau"));
    r = run({"mfpt", "--config", path("run.conf"), "--format", "json", "--sigma", "1.0"});
    j = cli::json::parse(r.out);
    EXPECT_NEAR(j["b_e_bar"].get<double>(), -0.2 / std::sqrt(2.0), 1e-14);
    EXPECT_EQ(j["tau_s"], 2e-9);
}

TEST_F(TempDir, SeedFromEnvironmentUnlessGivenAsFlag) {
    ::setenv(cli::seed_env, "7", 1);
    ASSERT_EQ(run({"trace", "--out", path("env")}).status, 0);
    ASSERT_EQ(run({"trace", "--seed", "8", "--out", path("flag")}).status, 0);
    ::unsetenv(cli::seed_env);
    ASSERT_EQ(run({"trace", "--seed", "7", "--out", path("seven")}).status, 0);
    EXPECT_EQ(slurp(path("env_noisy.csv")), slurp(path("seven_noisy.csv")));
    EXPECT_EQ(cli::json::parse(slurp(path("flag_events.json")))["seed"], 8);
}
