#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "decision.hpp"
#include "error.hpp"
#include "math.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace simba {

struct BiomarkerDistribution {
    double mean = 0.0;
    double sd = 1.0;

    double cdf(double x) const noexcept { return math::normal_cdf((x - mean) / sd); }
    double sample(Rng& rng) const { return rng.normal(mean, sd); }
    bool operator==(const BiomarkerDistribution&) const = default;
};

struct ScenarioIndication {
    double x = 0.0;  // true threshold
    double p_minus = 0.0;
    double p_plus = 0.0;
    std::size_t n_max = 50;
    std::size_t n_interim = 40;
    std::optional<FinalAction> optimal;  // reference decision, when tabulated

    bool operator==(const ScenarioIndication&) const = default;
};

struct Scenario {
    std::string name;
    std::vector<ScenarioIndication> indications;
    BiomarkerDistribution biomarker;

    bool operator==(const Scenario&) const = default;

    double overall_rate(std::size_t i) const
    {
        const auto& ind = indications.at(i);
        return simba::overall_rate(ind.p_minus, ind.p_plus, ind.x,
                                   [this](double x) { return biomarker.cdf(x); });
    }

    void validate() const
    {
        if (indications.empty()) throw usage_error("scenario '" + name + "' has no indications");
        for (const auto& ind : indications) {
            if (!(ind.p_minus >= 0.0 && ind.p_plus <= 1.0 && ind.p_minus <= ind.p_plus))
                throw usage_error("scenario '" + name + "': need 0 <= p- <= p+ <= 1");
            if (ind.n_interim == 0 || ind.n_interim > ind.n_max)
                throw usage_error("scenario '" + name + "': need 0 < interim size <= maximum");
        }
        if (!(biomarker.sd > 0.0)) throw usage_error("biomarker sd must be positive");
    }
};

/// The 18 tabulated simulation settings: scenarios 1-6 under true thresholds
/// (-0.1, 0, 0.1), (0, 0, 0) and (-0.5, 0, 0.5). Names are "s<k>", "s<k>-x0"
/// and "s<k>-x05" respectively. Every indication has N = 50 and an interim
/// look after 40 patients.
inline std::vector<Scenario> builtin_scenarios()
{
    using A = FinalAction;
    struct Row {
        double pm, pp;
        A opt;
    };
    struct Setting {
        const char* suffix;
        std::array<double, 3> x;
        std::array<std::array<Row, 3>, 6> rows;
    };
    const Row flat05{0.05, 0.05, A::S};
    const Row flat2{0.2, 0.2, A::INC};
    const Row flat4{0.4, 0.4, A::RA};
    const Row split14{0.1, 0.4, A::RP};
    const Row split13{0.1, 0.3, A::INC};
    const Row split15{0.1, 0.5, A::RP};

    const std::array<Setting, 3> settings{{
        {"", {-0.1, 0.0, 0.1},
         {{{flat05, flat05, flat05},
           {flat2, flat2, flat2},
           {split14, split14, split14},
           {split14, split14, split13},
           {flat4, flat4, split14},
           {flat2, split14, split14}}}},
        {"-x0", {0.0, 0.0, 0.0},
         {{{flat05, flat05, flat05},
           {flat2, flat2, flat2},
           {split14, split14, split14},
           {split14, split15, split13},
           {flat4, flat4, split14},
           {flat2, split14, split14}}}},
        {"-x05", {-0.5, 0.0, 0.5},
         {{{flat05, flat05, flat05},
           {flat2, flat2, flat2},
           {Row{0.1, 0.4, A::RA}, split14, split14},
           {Row{0.1, 0.4, A::RA}, split15, split13},
           {flat4, flat4, split14},
           {flat2, split14, split14}}}},
    }};

    std::vector<Scenario> out;
    for (const auto& st : settings) {
        for (std::size_t s = 0; s < 6; ++s) {
            Scenario sc;
            sc.name = "s" + std::to_string(s + 1) + st.suffix;
            for (std::size_t i = 0; i < 3; ++i) {
                const Row& r = st.rows[s][i];
                sc.indications.push_back({st.x[i], r.pm, r.pp, 50, 40, r.opt});
            }
            out.push_back(std::move(sc));
        }
    }
    return out;
}

/// Looks up a builtin scenario; a bare number k is shorthand for "s<k>".
inline Scenario find_scenario(const std::string& name)
{
    const std::string key =
        !name.empty() && std::all_of(name.begin(), name.end(),
                                          [](unsigned char c) { return std::isdigit(c) != 0; }) ? "s" + name : name;
    for (auto& s : builtin_scenarios())
        if (s.name == key) return s;
    throw usage_error("unknown scenario '" + name + "'");
}

/// Patients from indication i: biomarker from the scenario distribution,
/// response Bernoulli(p+) above the true threshold and Bernoulli(p-) at or
/// below it.
inline std::vector<Patient> simulate_patients(const Scenario& scenario, std::size_t i,
                                              std::size_t count, Rng& rng)
{
    const auto& ind = scenario.indications.at(i);
    std::vector<Patient> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double x = scenario.biomarker.sample(rng);
        const double p = x > ind.x ? ind.p_plus : ind.p_minus;
        out.push_back({x, rng.bernoulli(p)});
    }
    return out;
}

/// Same, restricted to biomarker > cutoff by rejection sampling.
inline std::vector<Patient> simulate_patients_above(const Scenario& scenario, std::size_t i,
                                                    std::size_t count, double cutoff, Rng& rng)
{
    constexpr std::size_t max_attempts = 100'000'000;
    const auto& ind = scenario.indications.at(i);
    std::vector<Patient> out;
    out.reserve(count);
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > max_attempts)
            throw numerical_error("enrichment cutoff leaves no eligible patients");
        const double x = scenario.biomarker.sample(rng);
        if (!(x > cutoff)) continue;
        const double p = x > ind.x ? ind.p_plus : ind.p_minus;
        out.push_back({x, rng.bernoulli(p)});
    }
    return out;
}

/// Per-indication result of one analysis (interim or final).
struct StageResult {
    std::size_t n_patients = 0;
    IntervalDecision intervals;
    ThresholdEstimate threshold;
    bool subgroup_flag = false;
    FinalAction final_action = FinalAction::S;
    InterimAction interim_action = InterimAction::S;

    bool operator==(const StageResult&) const = default;
};

struct IndicationReport {
    std::string label;
    std::optional<StageResult> interim;
    std::optional<StageResult> final_stage;
    bool stopped_at_interim = false;
    // EP enrichment cutoff used for the second cohort, when one was applied.
    std::optional<double> enrichment_cutoff;
    // EP chosen but no interim threshold existed, so enrollment stayed open.
    bool enrichment_fallback = false;
    // Two-step analysis: threshold held fixed in the second pass.
    bool threshold_fixed = false;
    std::size_t n_enrolled = 0;

    bool operator==(const IndicationReport&) const = default;
};

inline constexpr int report_format_version = 1;

struct TrialReport {
    int format_version = report_format_version;
    std::string variant;   // "simba", "nb" or "two-step"
    std::string scenario;  // scenario name or dataset path
    std::uint64_t seed = 0;
    std::vector<IndicationReport> indications;

    bool operator==(const TrialReport&) const = default;
};

/// Runs the sampler on `data` and applies every decision rule.
inline std::vector<StageResult> analyze(const TrialData& data, const PriorConfig& priors,
                                        const SamplerConfig& sampler,
                                        const DecisionConfig& decision)
{
    decision.validate(data.size());
    const PosteriorSamples samples = run_chain(data, priors, sampler);
    std::vector<StageResult> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const IntervalPartition part = decision.partition(i);
        const IndicationStats stats(data.indications[i].patients);
        StageResult r;
        r.n_patients = stats.size();
        r.intervals = optimal_intervals(samples, i, part);
        r.threshold = estimate_threshold(samples, i, stats, decision.threshold_loss(i));
        r.subgroup_flag = identify_subgroup(samples, i, decision.lambda);
        const auto& iv = r.intervals;
        r.final_action = map_final(iv.a_all, iv.a_plus, iv.a_minus, part);
        r.interim_action = map_interim(iv.a_all, iv.a_plus, iv.a_minus, part);
        out.push_back(r);
    }
    return out;
}

struct TwoStepResult {
    std::vector<StageResult> stages;
    std::vector<bool> threshold_fixed;  // false where step one found no subgroup
};

/// Estimates thresholds, then reruns the sampler with each x_i held at its
/// estimate (same seed) and recomputes the interval decisions. Indications
/// without M2 draws in step one keep a free threshold.
inline TwoStepResult two_step_analysis(const TrialData& data, const PriorConfig& priors,
                                       const SamplerConfig& sampler,
                                       const DecisionConfig& decision)
{
    const std::vector<StageResult> first = analyze(data, priors, sampler, decision);
    SamplerConfig second_cfg = sampler;
    second_cfg.fixed_thresholds.assign(data.size(), std::nullopt);
    TwoStepResult out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        second_cfg.fixed_thresholds[i] = first[i].threshold.t_hat;
        out.threshold_fixed.push_back(first[i].threshold.t_hat.has_value());
    }
    out.stages = analyze(data, priors, second_cfg, decision);
    for (std::size_t i = 0; i < data.size(); ++i)
        if (out.threshold_fixed[i]) out.stages[i].threshold = first[i].threshold;
    return out;
}

enum class AnalysisMode { one_step, two_step };

/// Seeds of the independent streams inside one simulated trial.
struct TrialStreams {
    std::uint64_t interim_patients, interim_fit, second_cohort, final_fit;

    explicit TrialStreams(std::uint64_t seed)
        : interim_patients(stream_seed(seed, 0)),
          interim_fit(stream_seed(seed, 1)),
          second_cohort(stream_seed(seed, 2)),
          final_fit(stream_seed(seed, 3))
    {
    }
};

/// One simulated trial: interim cohort, interim analysis, second cohort
/// according to the interim actions, final analysis on all enrolled data.
inline TrialReport run_trial(const Scenario& scenario, const PriorConfig& priors,
                             const SamplerConfig& sampler, const DecisionConfig& decision,
                             std::uint64_t seed, AnalysisMode mode = AnalysisMode::one_step)
{
    scenario.validate();
    const std::size_t n = scenario.indications.size();
    const TrialStreams streams(seed);

    TrialData data;
    {
        Rng rng(streams.interim_patients);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& si = scenario.indications[i];
            data.indications.push_back({"indication " + std::to_string(i + 1),
                                        simulate_patients(scenario, i, si.n_interim, rng),
                                        si.n_interim, si.n_max});
        }
    }

    SamplerConfig cfg = sampler;
    cfg.seed = streams.interim_fit;
    const std::vector<StageResult> interim = analyze(data, priors, cfg, decision);

    TrialReport report;
    report.scenario = scenario.name;
    report.seed = seed;
    report.indications.resize(n);
    {
        Rng rng(streams.second_cohort);
        for (std::size_t i = 0; i < n; ++i) {
            auto& rep = report.indications[i];
            rep.label = data.indications[i].label;
            rep.interim = interim[i];
            const auto& si = scenario.indications[i];
            const std::size_t n2 = si.n_max - si.n_interim;
            auto& pts = data.indications[i].patients;
            switch (interim[i].interim_action) {
                case InterimAction::S:
                    rep.stopped_at_interim = true;
                    break;
                case InterimAction::EA: {
                    auto more = simulate_patients(scenario, i, n2, rng);
                    pts.insert(pts.end(), more.begin(), more.end());
                    break;
                }
                case InterimAction::EP: {
                    const auto& cut = interim[i].threshold.t_hat;
                    auto more = cut ? simulate_patients_above(scenario, i, n2, *cut, rng)
                                    : simulate_patients(scenario, i, n2, rng);
                    rep.enrichment_cutoff = cut;
                    rep.enrichment_fallback = !cut.has_value();
                    pts.insert(pts.end(), more.begin(), more.end());
                    break;
                }
            }
            rep.n_enrolled = pts.size();
        }
    }

    cfg.seed = streams.final_fit;
    if (mode == AnalysisMode::one_step) {
        const auto fin = analyze(data, priors, cfg, decision);
        for (std::size_t i = 0; i < n; ++i) report.indications[i].final_stage = fin[i];
    } else {
        const auto fin = two_step_analysis(data, priors, cfg, decision);
        for (std::size_t i = 0; i < n; ++i) {
            report.indications[i].final_stage = fin.stages[i];
            report.indications[i].threshold_fixed = fin.threshold_fixed[i];
        }
    }
    return report;
}

struct IndicationOc {
    std::array<std::size_t, 4> final_counts{};    // indexed by FinalAction
    std::array<std::size_t, 3> interim_counts{};  // indexed by InterimAction
    std::size_t flag_count = 0;
    std::vector<std::optional<double>> t_hats;  // per replicate, final analysis

    bool operator==(const IndicationOc&) const = default;
};

/// Operating characteristics of one design over repeated simulated trials.
struct OperatingCharacteristics {
    std::string scenario;
    std::string variant;
    std::size_t n_reps = 0;
    std::uint64_t base_seed = 0;
    std::vector<IndicationOc> indications;
    std::vector<TrialReport> reports;

    double final_percent(std::size_t i, FinalAction a) const
    {
        return 100.0 * static_cast<double>(indications.at(i).final_counts[static_cast<std::size_t>(a)]) /
               static_cast<double>(n_reps);
    }
    double interim_percent(std::size_t i, InterimAction a) const
    {
        return 100.0 *
               static_cast<double>(indications.at(i).interim_counts[static_cast<std::size_t>(a)]) /
               static_cast<double>(n_reps);
    }
    double flag_percent(std::size_t i) const
    {
        return 100.0 * static_cast<double>(indications.at(i).flag_count) /
               static_cast<double>(n_reps);
    }

    // Median |t_hat - truth| over replicates with a threshold estimate.
    double median_threshold_error(std::size_t i, double truth) const
    {
        std::vector<double> err;
        for (const auto& t : indications.at(i).t_hats)
            if (t) err.push_back(std::abs(*t - truth));
        if (err.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(err.begin(), err.end());
        const std::size_t m = err.size() / 2;
        return err.size() % 2 == 1 ? err[m] : 0.5 * (err[m - 1] + err[m]);
    }
};

/// Replicate r runs with seed stream_seed(base_seed, r), so the result does
/// not depend on `threads`.
inline OperatingCharacteristics operating_characteristics(
    const Scenario& scenario, std::size_t n_reps, const PriorConfig& priors,
    const SamplerConfig& sampler, const DecisionConfig& decision, std::uint64_t base_seed,
    std::size_t threads = 1, AnalysisMode mode = AnalysisMode::one_step,
    const std::string& variant = "simba")
{
    if (n_reps == 0) throw usage_error("need at least one replicate");
    scenario.validate();
    decision.validate(scenario.indications.size());

    OperatingCharacteristics oc;
    oc.scenario = scenario.name;
    oc.variant = variant;
    oc.n_reps = n_reps;
    oc.base_seed = base_seed;
    oc.reports.resize(n_reps);
    parallel_for(n_reps, threads, [&](std::size_t r) {
        oc.reports[r] =
            run_trial(scenario, priors, sampler, decision, stream_seed(base_seed, r), mode);
        oc.reports[r].variant = variant;
    });

    oc.indications.resize(scenario.indications.size());
    for (const auto& rep : oc.reports) {
        for (std::size_t i = 0; i < rep.indications.size(); ++i) {
            const auto& ir = rep.indications[i];
            auto& agg = oc.indications[i];
            ++agg.final_counts[static_cast<std::size_t>(ir.final_stage->final_action)];
            ++agg.interim_counts[static_cast<std::size_t>(ir.interim->interim_action)];
            agg.flag_count += ir.final_stage->subgroup_flag ? 1 : 0;
            agg.t_hats.push_back(ir.final_stage->threshold.t_hat);
        }
    }
    return oc;
}

}  // namespace simba
