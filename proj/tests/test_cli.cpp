#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <simba/cli.hpp>

using namespace simba;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = SIMBA_TEST_DATA_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("simba_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) { return io_detail::read_file(p); }

// Output line of the single indication in an analyze/interim table.
std::string row(const std::string& out)
{
    const auto nl = out.find('\n');
    return out.substr(nl + 1);
}

}  // namespace

TEST(Cli, AnalyzeStrongSplitRecommendsSubgroup)
{
    const auto dir = fresh_dir("split");
    const auto r = run({"analyze", "--data", (data_dir / "strong_split.csv").string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string line = row(r.out);
    EXPECT_NE(line.find(" RP "), std::string::npos) << r.out;
    EXPECT_EQ(line.find("none"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(dir / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "summary.csv"));
    EXPECT_TRUE(fs::exists(dir / "effective_config.txt"));
    const auto rep = read_report(dir / "report.json");
    ASSERT_TRUE(rep.indications[0].final_stage);
    EXPECT_EQ(rep.indications[0].final_stage->final_action, FinalAction::RP);
    EXPECT_TRUE(rep.indications[0].final_stage->threshold.t_hat.has_value());
    fs::remove_all(dir);
}

TEST(Cli, AnalyzeFlatLowStops)
{
    const auto dir = fresh_dir("flat");
    const auto r = run({"analyze", "--data", (data_dir / "flat_low.csv").string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(row(r.out).find(" S "), std::string::npos) << r.out;
    fs::remove_all(dir);
}

TEST(Cli, MissingDataFile)
{
    const auto r = run({"analyze", "--data", "/nonexistent/patients.csv", "--out", fresh_dir("missing").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("/nonexistent/patients.csv"), std::string::npos);
}

TEST(Cli, MalformedDataIsDataError)
{
    const auto r = run({"analyze", "--data", (data_dir / "malformed.csv").string(), "--out", fresh_dir("bad").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
}

TEST(Cli, InterimBranches)
{
    for (auto [file, action] : {std::pair{"interim_stop.csv", " S "}, std::pair{"interim_all.csv", " EA "},
                                std::pair{"interim_positive.csv", " EP "}}) {
        const auto dir = fresh_dir("interim");
        const auto r = run({"interim", "--data", (data_dir / file).string(), "--out", dir.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_NE(row(r.out).find(action), std::string::npos) << file << "\n" << r.out;
        const auto rep = read_report(dir / "report.json");
        EXPECT_TRUE(rep.indications[0].interim.has_value());
        EXPECT_FALSE(rep.indications[0].final_stage.has_value());
        fs::remove_all(dir);
    }
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"simulate", "--bogus"}).code, 2);
    EXPECT_EQ(run({"simulate", "--variant", "mob", "--out", fresh_dir("u").string()}).code, 2);
    EXPECT_EQ(run({"simulate", "--scenario", "s9", "--out", fresh_dir("u").string()}).code, 2);
    EXPECT_EQ(run({"simulate", "--reps", "abc"}).code, 2);
    EXPECT_EQ(run({"analyze", "--out", fresh_dir("u").string()}).code, 2);
    EXPECT_EQ(run({"analyze", "--config", "/nonexistent/run.cfg"}).code, 2);
    EXPECT_EQ(run({"simulate", "--lambda", "2", "--out", fresh_dir("u").string()}).code, 2);
}

TEST(Cli, HelpDocumentsSeedVariable)
{
    const auto top = run({"--help"});
    EXPECT_EQ(top.code, 0);
    EXPECT_NE(top.out.find("SIMBA_SEED"), std::string::npos);
    const auto sub = run({"simulate", "--help"});
    EXPECT_EQ(sub.code, 0);
    EXPECT_NE(sub.out.find("SIMBA_SEED"), std::string::npos);
    EXPECT_NE(sub.out.find("--threads"), std::string::npos);
}

TEST(Cli, SeedFromEnvironmentUnlessFlagGiven)
{
    const auto dir = fresh_dir("env");
    const std::string data = (data_dir / "flat_low.csv").string();
    ::setenv("SIMBA_SEED", "4242", 1);
    auto r = run({"analyze", "--data", data, "--out", dir.string(), "--iters", "400"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_report(dir / "report.json").seed, 4242u);
    r = run({"analyze", "--data", data, "--out", dir.string(), "--iters", "400", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_report(dir / "report.json").seed, 5u);
    ::unsetenv("SIMBA_SEED");
    fs::remove_all(dir);
}

TEST(Cli, ConfigFileWithFlagOverrides)
{
    const auto dir = fresh_dir("cfg");
    fs::create_directories(dir);
    io_detail::write_file(dir / "run.cfg", "prior.gamma = 2.0\ndecision.w1 = 0.3\nsampler.total_iters = 500\nsampler.burn_in = 250\n");
    const auto r = run({"analyze", "--config", (dir / "run.cfg").string(), "--data",
                        (data_dir / "sizes_65_35_5.csv").string(), "--gamma", "1.5", "--w2", "0.4",
                        "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto eff = parse_config(dir / "out" / "effective_config.txt");
    EXPECT_EQ(std::get<HalfCauchyPrior>(eff.priors.threshold_prior).gamma, 1.5);
    EXPECT_EQ(eff.w1, 0.3);
    EXPECT_EQ(eff.w2, 0.4);
    EXPECT_EQ(eff.sampler.total_iters, 500u);
    fs::remove_all(dir);
}

TEST(Cli, SimulateTwiceIsByteIdentical)
{
    const auto a = fresh_dir("sim_a");
    const auto b = fresh_dir("sim_b");
    for (const auto& dir : {a, b}) {
        const auto r = run({"simulate", "--scenario", "1", "--reps", "50", "--seed", "7", "--out", dir.string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    for (const char* f : {"decisions.csv", "thresholds.csv", "oc.json"}) {
        SCOPED_TRACE(f);
        EXPECT_EQ(slurp(a / f), slurp(b / f));
    }
    const auto dec = slurp(a / "decisions.csv");
    EXPECT_NE(dec.find("s1,simba,50,7,"), std::string::npos);
    EXPECT_NE(dec.find("s1,nb,50,7,"), std::string::npos);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, ThreadCountDoesNotChangeOutputs)
{
    const auto a = fresh_dir("thr_a");
    const auto b = fresh_dir("thr_b");
    ASSERT_EQ(run({"simulate", "--scenario", "s3", "--reps", "6", "--iters", "600", "--threads", "1", "--out", a.string()}).code, 0);
    ASSERT_EQ(run({"simulate", "--scenario", "s3", "--reps", "6", "--iters", "600", "--threads", "3", "--out", b.string()}).code, 0);
    for (const char* f : {"decisions.csv", "thresholds.csv", "oc.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, AllScenarios)
{
    const auto dir = fresh_dir("all");
    const auto r = run({"simulate", "--scenario", "all", "--reps", "1", "--iters", "200", "--variant", "simba", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(slurp(dir / "oc.json"));
    EXPECT_EQ(j.size(), 18u);
    fs::remove_all(dir);
}

TEST(Cli, NoBorrowingVariantUsesFixedPrior)
{
    const auto dir = fresh_dir("nb");
    const auto r = run({"simulate", "--scenario", "s3", "--reps", "3", "--iters", "400", "--seed", "11",
                        "--variant", "nb", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    SamplerConfig c;
    c.total_iters = 400;
    c.burn_in = 200;
    c.seed = 11;
    auto d = DecisionConfig::uniform(3);
    d.lambda = 0.97;
    const auto sc = find_scenario("s3");
    const auto oc = operating_characteristics(sc, 3, PriorConfig::no_borrowing(), c, d, 11, 1,
                                              AnalysisMode::one_step, "nb");
    json expected = json::array();
    expected.push_back(oc_to_json(oc, sc));
    EXPECT_EQ(slurp(dir / "oc.json"), expected.dump(2) + "\n");
    fs::remove_all(dir);
}

TEST(Cli, TwoStepVariantAnalyze)
{
    const auto dir = fresh_dir("two");
    const auto r = run({"analyze", "--variant", "two-step", "--data", (data_dir / "strong_split.csv").string(),
                        "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = read_report(dir / "report.json");
    EXPECT_EQ(rep.variant, "two-step");
    EXPECT_TRUE(rep.indications[0].threshold_fixed);
    fs::remove_all(dir);
}

TEST(Cli, OcReportSummarizesSimulation)
{
    const auto dir = fresh_dir("report");
    ASSERT_EQ(run({"simulate", "--scenario", "s2", "--reps", "2", "--iters", "300", "--out", dir.string()}).code, 0);
    const auto r = run({"oc-report", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("s2"), std::string::npos);
    EXPECT_NE(r.out.find("INC"), std::string::npos);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 6);
    EXPECT_EQ(run({"oc-report", (dir / "missing.json").string()}).code, 3);
    fs::remove_all(dir);
}
