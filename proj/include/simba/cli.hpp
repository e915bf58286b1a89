#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "error.hpp"
#include "io.hpp"
#include "trial.hpp"

namespace simba::cli {

struct Flags {
    std::string config;
    std::string data;
    std::string scenario;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::string variant;
    std::optional<double> gamma;
    std::optional<double> w1;
    std::optional<double> w2;
    std::optional<double> lambda;
    std::optional<std::size_t> iters;
    std::optional<std::size_t> burn_in;
    std::string out;
    std::optional<std::size_t> threads;
    std::string report;  // oc-report input
};

namespace detail {

inline std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline void check_variant(const std::string& v)
{
    if (!v.empty() && v != "simba" && v != "nb" && v != "two-step")
        throw usage_error("--variant must be simba, nb or two-step");
}

// Config file first, then flag overrides.
inline RunConfig resolve(const Flags& f)
{
    RunConfig cfg = f.config.empty() ? RunConfig{} : parse_config(f.config);
    if (!f.data.empty()) cfg.data_path = f.data;
    if (!f.scenario.empty()) cfg.scenario = f.scenario;
    if (f.reps) cfg.n_reps = *f.reps;
    if (f.seed) cfg.sampler.seed = *f.seed;
    if (f.gamma) cfg.priors.threshold_prior = HalfCauchyPrior{*f.gamma};
    if (f.w1) cfg.w1 = *f.w1;
    if (f.w2) cfg.w2 = *f.w2;
    if (f.lambda) cfg.lambda = *f.lambda;
    if (f.iters) {
        cfg.sampler.total_iters = *f.iters;
        if (!f.burn_in) cfg.sampler.burn_in = *f.iters / 2;
    }
    if (f.burn_in) cfg.sampler.burn_in = *f.burn_in;
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (f.threads) cfg.threads = *f.threads;
    cfg.validate();
    return cfg;
}

inline PriorConfig variant_priors(const RunConfig& cfg, const std::string& variant)
{
    PriorConfig p = cfg.priors;
    if (variant == "nb") p.threshold_prior = FixedNoBorrowPrior{};
    return p;
}

inline void write_effective_config(const RunConfig& cfg)
{
    std::filesystem::create_directories(cfg.out_dir);
    io_detail::write_file(std::filesystem::path(cfg.out_dir) / "effective_config.txt",
                          config_to_text(cfg));
}

inline void print_stages(std::ostream& out, const TrialData& data,
                         const std::vector<StageResult>& stages, bool interim)
{
    out << "indication      n  action  (a,a+,a-)   t_hat     P(M2)   OBS  subgroup\n";
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        const std::string action(interim ? to_string(s.interim_action) : to_string(s.final_action));
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %4zu  %-6s  (%zu,%zu,%zu)%*s %-8s  %.3f  %4zu  %s\n",
                      data.indications[i].label.c_str(), s.n_patients, action.c_str(),
                      s.intervals.a_all, s.intervals.a_plus, s.intervals.a_minus, 2, "",
                      s.threshold.t_hat ? fmt("%.4f", *s.threshold.t_hat).c_str() : "none",
                      s.intervals.prob_m2, s.threshold.obs_size, s.subgroup_flag ? "yes" : "no");
        out << line;
    }
}

inline int cmd_analyze(const Flags& f, bool interim, std::ostream& out, std::ostream& err)
{
    check_variant(f.variant);
    const std::string variant = f.variant.empty() ? "simba" : f.variant;
    RunConfig cfg = resolve(f);
    cfg.mode = interim ? RunMode::interim : (variant == "two-step" ? RunMode::two_step : RunMode::analyze);
    if (cfg.data_path.empty()) throw usage_error("--data is required");
    const TrialData data = parse_dataset(cfg.data_path);
    const bool nb = variant == "nb";
    const DecisionConfig decision = cfg.decision(data.size(), nb);
    const PriorConfig priors = variant_priors(cfg, variant);

    err << "[simba] " << (interim ? "interim" : "final") << " analysis of " << data.size()
        << " indications (" << variant << ", seed " << cfg.sampler.seed << ")\n";
    std::vector<StageResult> stages;
    std::vector<bool> fixed(data.size(), false);
    if (variant == "two-step") {
        auto r = two_step_analysis(data, priors, cfg.sampler, decision);
        stages = std::move(r.stages);
        fixed = std::move(r.threshold_fixed);
    } else {
        stages = analyze(data, priors, cfg.sampler, decision);
    }

    TrialReport report;
    report.variant = variant;
    report.scenario = cfg.data_path;
    report.seed = cfg.sampler.seed;
    for (std::size_t i = 0; i < data.size(); ++i) {
        IndicationReport ir;
        ir.label = data.indications[i].label;
        ir.n_enrolled = stages[i].n_patients;
        ir.threshold_fixed = fixed[i];
        (interim ? ir.interim : ir.final_stage) = stages[i];
        report.indications.push_back(std::move(ir));
    }
    print_stages(out, data, stages, interim);
    write_effective_config(cfg);
    for (const auto& p : write_report(report, cfg.out_dir)) err << "[simba] wrote " << p.string() << "\n";
    return 0;
}

inline int cmd_simulate(const Flags& f, std::ostream& out, std::ostream& err)
{
    check_variant(f.variant);
    RunConfig cfg = resolve(f);
    cfg.mode = RunMode::simulate;

    std::vector<Scenario> scenarios;
    if (cfg.scenario == "all") scenarios = builtin_scenarios();
    else if (cfg.scenario == "custom") scenarios.push_back(cfg.custom_scenario());
    else scenarios.push_back(find_scenario(cfg.scenario));
    const std::vector<std::string> variants =
        f.variant.empty() ? std::vector<std::string>{"simba", "nb"} : std::vector<std::string>{f.variant};

    std::string decisions = oc_decisions_header();
    std::string thresholds = oc_thresholds_header();
    json runs = json::array();
    out << "scenario  variant   ind  optimal    S     INC   RA    RP   | int S   EA    EP   | flag   med|t-x|\n";
    for (const auto& sc : scenarios) {
        const std::size_t n = sc.indications.size();
        for (const auto& v : variants) {
            const auto t0 = std::chrono::steady_clock::now();
            err << "[simba] " << sc.name << " / " << v << ": " << cfg.n_reps << " trials on "
                << cfg.threads << " thread(s)\n";
            const auto oc = operating_characteristics(
                sc, cfg.n_reps, variant_priors(cfg, v), cfg.sampler, cfg.decision(n, v == "nb"),
                cfg.sampler.seed, cfg.threads,
                v == "two-step" ? AnalysisMode::two_step : AnalysisMode::one_step, v);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            err << "[simba]   done in " << fmt("%.1f", secs) << " s\n";
            decisions += oc_decisions_csv(oc, sc);
            thresholds += oc_thresholds_csv(oc, sc);
            runs.push_back(oc_to_json(oc, sc));
            for (std::size_t i = 0; i < n; ++i) {
                const auto& si = sc.indications[i];
                char line[256];
                std::snprintf(line, sizeof line,
                              "%-9s %-9s %3zu  %-7s %5.1f %5.1f %5.1f %5.1f | %5.1f %5.1f %5.1f | %5.1f  %s\n",
                              sc.name.c_str(), v.c_str(), i + 1,
                              si.optimal ? std::string(to_string(*si.optimal)).c_str() : "NA",
                              oc.final_percent(i, FinalAction::S), oc.final_percent(i, FinalAction::INC),
                              oc.final_percent(i, FinalAction::RA), oc.final_percent(i, FinalAction::RP),
                              oc.interim_percent(i, InterimAction::S),
                              oc.interim_percent(i, InterimAction::EA),
                              oc.interim_percent(i, InterimAction::EP), oc.flag_percent(i),
                              fmt("%.3f", oc.median_threshold_error(i, si.x)).c_str());
                out << line;
            }
        }
    }
    write_effective_config(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    io_detail::write_file(dir / "decisions.csv", decisions);
    io_detail::write_file(dir / "thresholds.csv", thresholds);
    io_detail::write_file(dir / "oc.json", runs.dump(2) + "\n");
    err << "[simba] wrote " << (dir / "decisions.csv").string() << ", "
        << (dir / "thresholds.csv").string() << ", " << (dir / "oc.json").string() << "\n";
    return 0;
}

// Summarizes an oc.json written by `simulate`: the share of trials that reached
// the tabulated optimal decision, per scenario, variant and indication.
inline int cmd_oc_report(const Flags& f, std::ostream& out)
{
    const std::filesystem::path path =
        !f.report.empty() ? std::filesystem::path(f.report)
                          : std::filesystem::path(f.out.empty() ? "out" : f.out) / "oc.json";
    if (!std::filesystem::exists(path)) throw data_error("'" + path.string() + "' not found");
    json runs;
    try {
        runs = json::parse(io_detail::read_file(path));
        out << "scenario  variant   reps  ind  optimal  correct%  flag%   med|t-x|\n";
        for (const auto& run : runs) {
            for (const auto& ind : run.at("indications")) {
                const auto& opt = ind.at("optimal");
                const double correct =
                    opt.is_null() ? 0.0 : ind.at("final_percent").at(opt.get<std::string>()).get<double>();
                const auto& med = ind.at("median_abs_threshold_error");
                char line[256];
                std::snprintf(line, sizeof line, "%-9s %-9s %4zu  %3zu  %-7s  %7s  %5.1f   %s\n",
                              run.at("scenario").get<std::string>().c_str(),
                              run.at("variant").get<std::string>().c_str(),
                              run.at("reps").get<std::size_t>(), ind.at("indication").get<std::size_t>(),
                              opt.is_null() ? "NA" : opt.get<std::string>().c_str(),
                              opt.is_null() ? "NA" : fmt("%.1f", correct).c_str(),
                              ind.at("subgroup_flag_percent").get<double>(),
                              med.is_null() ? "NA" : fmt("%.3f", med.get<double>()).c_str());
                out << line;
            }
        }
    } catch (const json::exception& e) {
        throw data_error("malformed '" + path.string() + "': " + e.what());
    }
    return 0;
}

inline void add_common(CLI::App* cmd, Flags& f, bool data, bool scenario)
{
    cmd->add_option("--config", f.config, "Run configuration file (key = value)");
    if (data) cmd->add_option("--data", f.data, "Patient CSV: indication,biomarker,response");
    if (scenario) {
        cmd->add_option("--scenario", f.scenario, "Builtin scenario (s1..s6, s1-x0.., s1-x05..), 'all' or 'custom'");
        cmd->add_option("--reps", f.reps, "Simulated trials per scenario and variant");
    }
    cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores); results do not depend on it");
    cmd->add_option("--seed", f.seed, "Base random seed")->envname("SIMBA_SEED");
    cmd->add_option("--variant", f.variant, "simba, nb (no borrowing) or two-step");
    cmd->add_option("--gamma", f.gamma, "Half-Cauchy scale of the threshold spread");
    cmd->add_option("--w1", f.w1, "Threshold loss weight on the subgroup response gap");
    cmd->add_option("--w2", f.w2, "Threshold loss weight on the subgroup size");
    cmd->add_option("--lambda", f.lambda, "Posterior cutoff on P(M2) for flagging a subgroup");
    cmd->add_option("--iters", f.iters, "MCMC iterations (burn-in defaults to half)");
    cmd->add_option("--burn-in", f.burn_in, "MCMC burn-in iterations");
    cmd->add_option("--out", f.out, "Output directory");
}

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr)
{
    CLI::App app{"Bayesian basket-trial analysis with biomarker subgroup selection", "simba"};
    app.require_subcommand(1);
    app.footer(
        "Environment: SIMBA_SEED sets the seed when --seed is absent.\n"
        "Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.");
    Flags f;
    auto* analyze_cmd = app.add_subcommand("analyze", "Final analysis of a dataset");
    auto* interim_cmd = app.add_subcommand("interim", "Interim analysis of a dataset (S / EA / EP)");
    auto* simulate_cmd = app.add_subcommand("simulate", "Operating characteristics by simulation");
    auto* report_cmd = app.add_subcommand("oc-report", "Summarize an oc.json from simulate");
    detail::add_common(analyze_cmd, f, true, false);
    detail::add_common(interim_cmd, f, true, false);
    detail::add_common(simulate_cmd, f, false, true);
    report_cmd->add_option("input", f.report, "oc.json path (default <out>/oc.json)");
    report_cmd->add_option("--out", f.out, "Directory holding oc.json");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "simba: " << e.what() << "\n";
        return 2;
    }

    try {
        if (analyze_cmd->parsed()) return detail::cmd_analyze(f, false, out, err);
        if (interim_cmd->parsed()) return detail::cmd_analyze(f, true, out, err);
        if (simulate_cmd->parsed()) return detail::cmd_simulate(f, out, err);
        return detail::cmd_oc_report(f, out);
    } catch (const usage_error& e) {
        err << "simba: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        err << "simba: " << e.what() << "\n";
        return 3;
    } catch (const numerical_error& e) {
        err << "simba: numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const contract_error& e) {
        err << "simba: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "simba: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace simba::cli
