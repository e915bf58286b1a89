#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include <simba/io.hpp>

using namespace simba;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = SIMBA_TEST_DATA_DIR;

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("simba_test_io_" + name);
    fs::remove_all(p);
    return p;
}

template <class Fn>
std::string error_message(Fn&& fn)
{
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Dataset, ThreeRowFixtureGroupsByLabel)
{
    const auto d = parse_dataset(data_dir / "three_rows.csv");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.indications[0].label, "armA");
    EXPECT_EQ(d.indications[1].label, "armB");
    ASSERT_EQ(d.indications[0].patients.size(), 2u);
    EXPECT_EQ(d.indications[0].patients[0].biomarker, 0.12);
    EXPECT_TRUE(d.indications[0].patients[0].response);
    EXPECT_EQ(d.indications[0].patients[1].biomarker, 1.5);
    EXPECT_EQ(d.indications[0].n_max, 2u);
    EXPECT_EQ(d.indications[0].n_interim, 2u);
    EXPECT_NO_THROW(d.validate());
}

TEST(Dataset, RealDataSizes)
{
    const auto d = parse_dataset(data_dir / "sizes_65_35_5.csv");
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d.indications[0].patients.size(), 65u);
    EXPECT_EQ(d.indications[1].patients.size(), 35u);
    EXPECT_EQ(d.indications[2].patients.size(), 5u);
}

TEST(Dataset, MalformedRowNamesLine)
{
    const std::string msg = error_message([] { parse_dataset(data_dir / "malformed.csv"); });
    EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
    EXPECT_THROW(parse_dataset(data_dir / "malformed.csv"), data_error);
}

TEST(Dataset, Errors)
{
    EXPECT_THROW(parse_dataset_text(""), data_error);
    EXPECT_THROW(parse_dataset_text("indication,biomarker,response\n"), data_error);
    EXPECT_THROW(parse_dataset_text("arm,x,y\na,1,1\n"), data_error);
    EXPECT_THROW(parse_dataset_text("indication,biomarker,response\na,1,2\n"), data_error);
    EXPECT_THROW(parse_dataset_text("indication,biomarker,response\na,1\n"), data_error);
    EXPECT_THROW(parse_dataset_text("indication,biomarker,response\na,inf,1\n"), data_error);
    EXPECT_THROW(parse_dataset_text("indication,biomarker,response\n,0.1,1\n"), data_error);
    const std::string msg = error_message([] { parse_dataset("/nonexistent/x.csv"); });
    EXPECT_NE(msg.find("/nonexistent/x.csv"), std::string::npos);
}

TEST(Dataset, ToleratesCrlfAndBlankLines)
{
    const auto d = parse_dataset_text("indication,biomarker,response\r\n\r\na, -0.5 ,0\r\nb,1e-1,1\r\n");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.indications[0].patients[0].biomarker, -0.5);
    EXPECT_EQ(d.indications[1].patients[0].biomarker, 0.1);
}

TEST(Dataset, CsvRoundTrip)
{
    const auto d = parse_dataset(data_dir / "sizes_65_35_5.csv");
    const auto again = parse_dataset_text(dataset_to_csv(d));
    ASSERT_EQ(again.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        ASSERT_EQ(again.indications[i].patients.size(), d.indications[i].patients.size());
        for (std::size_t j = 0; j < d.indications[i].patients.size(); ++j) {
            EXPECT_EQ(again.indications[i].patients[j].biomarker, d.indications[i].patients[j].biomarker);
            EXPECT_EQ(again.indications[i].patients[j].response, d.indications[i].patients[j].response);
        }
    }
}

TEST(Config, EmptyGivesDefaults)
{
    const auto c = parse_config_text("");
    EXPECT_EQ(c, RunConfig{});
    EXPECT_EQ(c.priors, PriorConfig{});
    EXPECT_EQ(c.priors.a_delta, 30.0);
    EXPECT_EQ(c.priors.b_delta, 21.5);
    EXPECT_EQ(std::get<HalfCauchyPrior>(c.priors.threshold_prior).gamma, 2.5);
    EXPECT_EQ(c.w1, 0.2);
    EXPECT_EQ(c.w2, 0.5);
    EXPECT_EQ(c.lambda, 0.98);
    EXPECT_EQ(c.lambda_nb, 0.97);
    EXPECT_EQ(c.decision(3), DecisionConfig::uniform(3));
}

TEST(Config, OverridesAndComments)
{
    const auto c = parse_config_text(
        "# sensitivity run\n"
        "prior.gamma = 1.0   # tighter borrowing\n"
        "decision.lambda = 0.97\n"
        "decision.lrv = 0.15, 0.03, 0.03\n"
        "decision.tv = 0.25, 0.06, 0.06\n"
        "decision.epsilon = 0.05, 0.03, 0.03\n"
        "sampler.seed = 18446744073709551615\n"
        "run.reps = 50\n");
    EXPECT_EQ(std::get<HalfCauchyPrior>(c.priors.threshold_prior).gamma, 1.0);
    EXPECT_EQ(c.lambda, 0.97);
    EXPECT_EQ(c.sampler.seed, 18446744073709551615ULL);
    const auto d = c.decision(3);
    EXPECT_EQ(d.lambda, 0.97);
    EXPECT_EQ(d.partition(0).k1, 3u);
    EXPECT_EQ(d.partition(1).epsilon, 0.03);
    EXPECT_THROW(c.decision(2), usage_error);
    EXPECT_EQ(c.decision(3, true).lambda, 0.97);
}

TEST(Config, NoBorrowingLambda)
{
    const auto c = parse_config_text("decision.lambda_nb = 0.97\nprior.threshold_prior = fixed\n");
    EXPECT_EQ(c.decision(1, true).lambda, 0.97);
    EXPECT_FALSE(c.priors.hierarchical());
}

TEST(Config, StrictParsing)
{
    EXPECT_THROW(parse_config_text("prior.gama = 2\n"), usage_error);
    EXPECT_THROW(parse_config_text("prior.a = -1\n"), usage_error);
    EXPECT_THROW(parse_config_text("prior.a = abc\n"), usage_error);
    EXPECT_THROW(parse_config_text("decision.lambda = 1.5\n"), usage_error);
    EXPECT_THROW(parse_config_text("decision.lrv = 0.3\ndecision.tv = 0.1\n"), usage_error);
    EXPECT_THROW(parse_config_text("sampler.burn_in = 5000\n"), usage_error);
    EXPECT_THROW(parse_config_text("run.reps = 0\n"), usage_error);
    EXPECT_THROW(parse_config_text("prior.a = 1\nprior.a = 2\n"), usage_error);
    EXPECT_THROW(parse_config_text("just text\n"), usage_error);
    EXPECT_THROW(parse_config_text("prior.threshold_prior = student\n"), usage_error);
    const std::string msg = error_message([] { parse_config_text("\n\nprior.gama = 2\n", "cfg"); });
    EXPECT_NE(msg.find("cfg:3:"), std::string::npos) << msg;
    EXPECT_THROW(parse_config("/nonexistent/run.cfg"), usage_error);
}

TEST(Config, RoundTrip)
{
    std::vector<RunConfig> configs(4);
    configs[1].priors.threshold_prior = InverseGammaPrior{2.0, 1.5};
    configs[1].lrv = {0.15, 0.03};
    configs[1].tv = {0.25, 0.06};
    configs[1].epsilon = {0.05, std::nullopt};
    configs[1].sampler.seed = 123456789012345ULL;
    configs[1].sampler.adapt = false;
    configs[2].priors = PriorConfig::no_borrowing();
    configs[2].priors.mu_theta = -1.0 / 3.0;
    configs[2].mode = RunMode::simulate;
    configs[2].data_path = "data/x.csv";
    configs[3].scenario = "custom";
    configs[3].scenario_x = {-0.1, 0.2};
    configs[3].scenario_p_minus = {0.1, 0.05};
    configs[3].scenario_p_plus = {0.4, 0.3};
    configs[3].w1 = 0.1 + 0.2;
    for (const auto& c : configs) {
        const auto text = config_to_text(c);
        EXPECT_EQ(parse_config_text(text), c) << text;
        EXPECT_EQ(config_to_text(parse_config_text(text)), text);
    }
    EXPECT_EQ(configs[3].custom_scenario().indications.size(), 2u);
}

namespace {

TrialReport sample_report()
{
    SamplerConfig c;
    c.total_iters = 600;
    c.burn_in = 300;
    auto r = run_trial(find_scenario("s3"), PriorConfig{}, c, DecisionConfig::uniform(3), 4);
    r.variant = "simba";
    return r;
}

}  // namespace

TEST(Report, JsonRoundTrip)
{
    const TrialReport r = sample_report();
    const auto text = report_to_json(r);
    EXPECT_EQ(report_from_json(text), r);
    EXPECT_EQ(report_to_json(report_from_json(text)), text);
    EXPECT_NE(text.find("\"format_version\": 1"), std::string::npos);

    TrialReport partial = r;
    partial.indications[0].final_stage.reset();
    partial.indications[1].interim.reset();
    partial.indications[2].interim->threshold.t_hat.reset();
    EXPECT_EQ(report_from_json(report_to_json(partial)), partial);
}

TEST(Report, RejectsOtherVersionsAndGarbage)
{
    auto j = json::parse(report_to_json(sample_report()));
    j["format_version"] = 2;
    EXPECT_THROW(report_from_json(j.dump()), data_error);
    EXPECT_THROW(report_from_json("{not json"), data_error);
    EXPECT_THROW(report_from_json("{}"), data_error);
}

TEST(Report, WriteThenRead)
{
    const auto dir = fresh_dir("report");
    const TrialReport r = sample_report();
    const auto files = write_report(r, dir);
    ASSERT_EQ(files.size(), 2u);
    EXPECT_EQ(read_report(dir / "report.json"), r);
    const auto csv = io_detail::read_file(dir / "summary.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_EQ(csv.rfind("variant,source,seed,indication", 0), 0u);
    fs::remove_all(dir);
}

TEST(Report, OcTables)
{
    SamplerConfig c;
    c.total_iters = 400;
    c.burn_in = 200;
    const auto sc = find_scenario("s3");
    const auto oc = operating_characteristics(sc, 3, PriorConfig{}, c, DecisionConfig::uniform(3), 9);
    const auto dec = oc_decisions_csv(oc, sc);
    EXPECT_EQ(std::count(dec.begin(), dec.end(), '\n'), 3 * (4 + 3 + 1));
    EXPECT_NE(dec.find("s3,simba,3,9,1,-0.1,0.1,0.4,RP,final,RP,"), std::string::npos) << dec;
    const auto th = oc_thresholds_csv(oc, sc);
    EXPECT_EQ(std::count(th.begin(), th.end(), '\n'), 9);
    const auto j = oc_to_json(oc, sc);
    EXPECT_EQ(j["indications"].size(), 3u);
    EXPECT_EQ(j["reps"], 3);
}
