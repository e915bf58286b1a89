#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "decision.hpp"
#include "error.hpp"
#include "model.hpp"
#include "sampler.hpp"
#include "trial.hpp"

namespace simba {

namespace io_detail {

inline std::string_view trim(std::string_view s) noexcept
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) noexcept
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> to_uint(std::string_view s) noexcept
{
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw data_error("failed writing '" + path.string() + "'");
}

}  // namespace io_detail

/// Reads a patient CSV with header `indication,biomarker,response`.
/// Indications appear in order of first occurrence; each gets interim and
/// maximum size equal to its row count.
inline TrialData parse_dataset_text(std::string_view text, const std::string& source = "<input>")
{
    using namespace io_detail;
    TrialData data;
    std::map<std::string, std::size_t, std::less<>> index;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
        const auto fields = split(line, ',');
        if (!header_seen) {
            if (fields.size() != 3 || fields[0] != "indication" || fields[1] != "biomarker" ||
                fields[2] != "response")
                throw data_error(where() + "expected header 'indication,biomarker,response'");
            header_seen = true;
            continue;
        }
        if (fields.size() != 3) throw data_error(where() + "expected 3 fields");
        if (fields[0].empty()) throw data_error(where() + "empty indication label");
        const auto x = to_double(fields[1]);
        if (!x) throw data_error(where() + "biomarker '" + std::string(fields[1]) + "' is not a finite number");
        if (fields[2] != "0" && fields[2] != "1")
            throw data_error(where() + "response '" + std::string(fields[2]) + "' is not 0 or 1");
        auto it = index.find(fields[0]);
        if (it == index.end()) {
            it = index.emplace(std::string(fields[0]), data.indications.size()).first;
            data.indications.push_back({std::string(fields[0]), {}, 0, 0});
        }
        data.indications[it->second].patients.push_back({*x, fields[2] == "1"});
    }
    if (!header_seen) throw data_error(source + ": empty file");
    if (data.indications.empty()) throw data_error(source + ": no patient rows");
    for (auto& ind : data.indications) ind.n_interim = ind.n_max = ind.patients.size();
    return data;
}

inline TrialData parse_dataset(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw data_error("dataset '" + path.string() + "' not found");
    return parse_dataset_text(io_detail::read_file(path), path.string());
}

inline std::string dataset_to_csv(const TrialData& data)
{
    std::string out = "indication,biomarker,response\n";
    for (const auto& ind : data.indications)
        for (const auto& p : ind.patients)
            out += ind.label + "," + io_detail::format_double(p.biomarker) + "," +
                   (p.response ? "1" : "0") + "\n";
    return out;
}

enum class RunMode { analyze, interim, simulate, two_step };

inline std::string_view to_string(RunMode m) noexcept
{
    switch (m) {
        case RunMode::analyze: return "analyze";
        case RunMode::interim: return "interim";
        case RunMode::simulate: return "simulate";
        case RunMode::two_step: return "two-step";
    }
    return "?";
}

/// Everything a run needs. Per-indication decision lists hold either one
/// value (applied to every indication) or one value per indication.
struct RunConfig {
    PriorConfig priors;
    SamplerConfig sampler;

    std::vector<double> lrv{0.1};
    std::vector<double> tv{0.3};
    std::vector<std::optional<double>> epsilon{std::nullopt};
    double w1 = 0.2;
    double w2 = 0.5;
    double lambda = 0.98;
    double lambda_nb = 0.97;  // subgroup cutoff for the no-borrowing variant

    RunMode mode = RunMode::analyze;
    std::string scenario = "s1";
    std::string data_path;
    std::size_t n_reps = 200;
    std::string out_dir = "out";
    std::size_t threads = 1;

    // Optional custom scenario (used when scenario = "custom").
    std::vector<double> scenario_x;
    std::vector<double> scenario_p_minus;
    std::vector<double> scenario_p_plus;
    std::size_t scenario_n_max = 50;
    std::size_t scenario_n_interim = 40;

    bool operator==(const RunConfig&) const = default;

    DecisionConfig decision(std::size_t n_indications, bool no_borrowing = false) const
    {
        auto pick = [&](const auto& v, const char* name, std::size_t i) {
            if (v.size() == 1) return v[0];
            if (v.size() != n_indications)
                throw usage_error(std::string("decision.") + name + " lists " +
                                  std::to_string(v.size()) + " values for " +
                                  std::to_string(n_indications) + " indications");
            return v[i];
        };
        DecisionConfig d;
        for (std::size_t i = 0; i < n_indications; ++i)
            d.indications.push_back(
                {pick(lrv, "lrv", i), pick(tv, "tv", i), pick(epsilon, "epsilon", i)});
        d.w1 = w1;
        d.w2 = w2;
        d.lambda = no_borrowing ? lambda_nb : lambda;
        d.validate(n_indications);
        return d;
    }

    Scenario custom_scenario() const
    {
        const std::size_t n = scenario_x.size();
        if (n == 0 || scenario_p_minus.size() != n || scenario_p_plus.size() != n)
            throw usage_error("custom scenario needs equally long scenario.x, scenario.p_minus "
                              "and scenario.p_plus lists");
        Scenario sc;
        sc.name = "custom";
        for (std::size_t i = 0; i < n; ++i)
            sc.indications.push_back({scenario_x[i], scenario_p_minus[i], scenario_p_plus[i],
                                      scenario_n_max, scenario_n_interim, std::nullopt});
        sc.validate();
        return sc;
    }

    void validate() const
    {
        priors.validate();
        sampler.validate();
        if (lrv.empty() || tv.empty() || epsilon.empty())
            throw usage_error("decision lists must not be empty");
        if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw usage_error("loss weights must be nonnegative");
        for (double l : {lambda, lambda_nb})
            if (!(l >= 0.0 && l <= 1.0)) throw usage_error("lambda must lie in [0, 1]");
        if (n_reps == 0) throw usage_error("run.reps must be positive");
        const std::size_t n = std::max({lrv.size(), tv.size(), epsilon.size()});
        (void)decision(n);
    }
};

namespace io_detail {

inline std::string list_to_string(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

inline std::string list_to_string(const std::vector<std::optional<double>>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + (v[i] ? format_double(*v[i]) : std::string("auto"));
    return s;
}

}  // namespace io_detail

/// Flat `key = value` text; `#` starts a comment. Every key is optional and
/// unknown keys are rejected. See README for the key reference.
inline RunConfig parse_config_text(std::string_view text, const std::string& source = "<config>")
{
    using namespace io_detail;
    RunConfig cfg;
    std::string hc_gamma, ig_shape, ig_scale, fx_mu, fx_sigma;
    std::string threshold_prior = "half_cauchy";

    using Setter = std::function<void(std::string_view)>;
    std::string where;
    auto real = [&](double& dst) -> Setter {
        return [&dst, &where](std::string_view v) {
            const auto d = to_double(v);
            if (!d) throw usage_error(where + "expected a number, got '" + std::string(v) + "'");
            dst = *d;
        };
    };
    auto count = [&](std::size_t& dst) -> Setter {
        return [&dst, &where](std::string_view v) {
            const auto d = to_uint(v);
            if (!d) throw usage_error(where + "expected a nonnegative integer, got '" + std::string(v) + "'");
            dst = static_cast<std::size_t>(*d);
        };
    };
    auto reals = [&](std::vector<double>& dst) -> Setter {
        return [&dst, &where](std::string_view v) {
            dst.clear();
            for (auto f : split(v, ',')) {
                const auto d = to_double(f);
                if (!d) throw usage_error(where + "expected a number list, got '" + std::string(v) + "'");
                dst.push_back(*d);
            }
        };
    };
    auto text_value = [](std::string& dst) -> Setter {
        return [&dst](std::string_view v) { dst = std::string(v); };
    };

    double gamma = 2.5, shape = 1.0, scale = 1.0, mu0 = 0.0, sigma0 = 3.0;
    std::map<std::string, Setter, std::less<>> keys{
        {"prior.a", real(cfg.priors.a)},
        {"prior.b", real(cfg.priors.b)},
        {"prior.mu_theta", real(cfg.priors.mu_theta)},
        {"prior.sigma_theta", real(cfg.priors.sigma_theta)},
        {"prior.mu_theta_minus", real(cfg.priors.mu_theta_minus)},
        {"prior.sigma_theta_minus", real(cfg.priors.sigma_theta_minus)},
        {"prior.a_delta", real(cfg.priors.a_delta)},
        {"prior.b_delta", real(cfg.priors.b_delta)},
        {"prior.sigma", real(cfg.priors.sigma)},
        {"prior.threshold_prior", text_value(threshold_prior)},
        {"prior.gamma", real(gamma)},
        {"prior.ig_shape", real(shape)},
        {"prior.ig_scale", real(scale)},
        {"prior.mu_x0", real(mu0)},
        {"prior.sigma_x0", real(sigma0)},
        {"sampler.total_iters", count(cfg.sampler.total_iters)},
        {"sampler.burn_in", count(cfg.sampler.burn_in)},
        {"sampler.thin", count(cfg.sampler.thin)},
        {"sampler.seed",
         [&](std::string_view v) {
             const auto d = to_uint(v);
             if (!d) throw usage_error(where + "expected an unsigned 64-bit seed");
             cfg.sampler.seed = *d;
         }},
        {"sampler.adapt",
         [&](std::string_view v) {
             if (v == "true" || v == "1") cfg.sampler.adapt = true;
             else if (v == "false" || v == "0") cfg.sampler.adapt = false;
             else throw usage_error(where + "expected true or false");
         }},
        {"sampler.sd_theta", real(cfg.sampler.proposal_sds.theta)},
        {"sampler.sd_theta_minus", real(cfg.sampler.proposal_sds.theta_minus)},
        {"sampler.sd_log_delta", real(cfg.sampler.proposal_sds.log_delta)},
        {"sampler.sd_x", real(cfg.sampler.proposal_sds.x)},
        {"sampler.sd_log_sigma_x", real(cfg.sampler.proposal_sds.log_sigma_x)},
        {"decision.lrv", reals(cfg.lrv)},
        {"decision.tv", reals(cfg.tv)},
        {"decision.epsilon",
         [&](std::string_view v) {
             cfg.epsilon.clear();
             for (auto f : split(v, ',')) {
                 if (f == "auto") {
                     cfg.epsilon.push_back(std::nullopt);
                     continue;
                 }
                 const auto d = to_double(f);
                 if (!d) throw usage_error(where + "expected numbers or 'auto'");
                 cfg.epsilon.push_back(*d);
             }
         }},
        {"decision.w1", real(cfg.w1)},
        {"decision.w2", real(cfg.w2)},
        {"decision.lambda", real(cfg.lambda)},
        {"decision.lambda_nb", real(cfg.lambda_nb)},
        {"run.mode",
         [&](std::string_view v) {
             for (auto m : {RunMode::analyze, RunMode::interim, RunMode::simulate, RunMode::two_step})
                 if (to_string(m) == v) {
                     cfg.mode = m;
                     return;
                 }
             throw usage_error(where + "unknown mode '" + std::string(v) + "'");
         }},
        {"run.scenario", text_value(cfg.scenario)},
        {"run.data", text_value(cfg.data_path)},
        {"run.reps", count(cfg.n_reps)},
        {"run.out", text_value(cfg.out_dir)},
        {"run.threads", count(cfg.threads)},
        {"scenario.x", reals(cfg.scenario_x)},
        {"scenario.p_minus", reals(cfg.scenario_p_minus)},
        {"scenario.p_plus", reals(cfg.scenario_p_plus)},
        {"scenario.n_max", count(cfg.scenario_n_max)},
        {"scenario.n_interim", count(cfg.scenario_n_interim)},
    };

    std::map<std::string, std::size_t, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        where = source + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw usage_error(where + "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw usage_error(where + "unknown key '" + std::string(key) + "'");
        if (const auto s = seen.find(key); s != seen.end())
            throw usage_error(where + "duplicate key '" + std::string(key) + "' (first on line " +
                              std::to_string(s->second) + ")");
        seen.emplace(std::string(key), line_no);
        it->second(value);
    }

    if (threshold_prior == "half_cauchy") {
        cfg.priors.threshold_prior = HalfCauchyPrior{gamma};
    } else if (threshold_prior == "inverse_gamma") {
        cfg.priors.threshold_prior = InverseGammaPrior{shape, scale};
    } else if (threshold_prior == "fixed") {
        cfg.priors.threshold_prior = FixedNoBorrowPrior{mu0, sigma0};
    } else {
        throw usage_error(source + ": prior.threshold_prior must be half_cauchy, inverse_gamma or fixed");
    }
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw usage_error("config '" + path.string() + "' not found");
    return parse_config_text(io_detail::read_file(path), path.string());
}

/// Writes every resolved value, in a form parse_config_text reads back.
inline std::string config_to_text(const RunConfig& cfg)
{
    using io_detail::format_double;
    using io_detail::list_to_string;
    std::string s;
    auto kv = [&s](const char* k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
    const auto& p = cfg.priors;
    kv("prior.a", format_double(p.a));
    kv("prior.b", format_double(p.b));
    kv("prior.mu_theta", format_double(p.mu_theta));
    kv("prior.sigma_theta", format_double(p.sigma_theta));
    kv("prior.mu_theta_minus", format_double(p.mu_theta_minus));
    kv("prior.sigma_theta_minus", format_double(p.sigma_theta_minus));
    kv("prior.a_delta", format_double(p.a_delta));
    kv("prior.b_delta", format_double(p.b_delta));
    kv("prior.sigma", format_double(p.sigma));
    if (const auto* hc = std::get_if<HalfCauchyPrior>(&p.threshold_prior)) {
        kv("prior.threshold_prior", "half_cauchy");
        kv("prior.gamma", format_double(hc->gamma));
    } else if (const auto* ig = std::get_if<InverseGammaPrior>(&p.threshold_prior)) {
        kv("prior.threshold_prior", "inverse_gamma");
        kv("prior.ig_shape", format_double(ig->shape));
        kv("prior.ig_scale", format_double(ig->scale));
    } else {
        const auto& fx = std::get<FixedNoBorrowPrior>(p.threshold_prior);
        kv("prior.threshold_prior", "fixed");
        kv("prior.mu_x0", format_double(fx.mu_x0));
        kv("prior.sigma_x0", format_double(fx.sigma_x0));
    }
    const auto& sm = cfg.sampler;
    kv("sampler.total_iters", std::to_string(sm.total_iters));
    kv("sampler.burn_in", std::to_string(sm.burn_in));
    kv("sampler.thin", std::to_string(sm.thin));
    kv("sampler.seed", std::to_string(sm.seed));
    kv("sampler.adapt", sm.adapt ? "true" : "false");
    kv("sampler.sd_theta", format_double(sm.proposal_sds.theta));
    kv("sampler.sd_theta_minus", format_double(sm.proposal_sds.theta_minus));
    kv("sampler.sd_log_delta", format_double(sm.proposal_sds.log_delta));
    kv("sampler.sd_x", format_double(sm.proposal_sds.x));
    kv("sampler.sd_log_sigma_x", format_double(sm.proposal_sds.log_sigma_x));
    kv("decision.lrv", list_to_string(cfg.lrv));
    kv("decision.tv", list_to_string(cfg.tv));
    kv("decision.epsilon", list_to_string(cfg.epsilon));
    kv("decision.w1", format_double(cfg.w1));
    kv("decision.w2", format_double(cfg.w2));
    kv("decision.lambda", format_double(cfg.lambda));
    kv("decision.lambda_nb", format_double(cfg.lambda_nb));
    kv("run.mode", std::string(to_string(cfg.mode)));
    kv("run.scenario", cfg.scenario);
    if (!cfg.data_path.empty()) kv("run.data", cfg.data_path);
    kv("run.reps", std::to_string(cfg.n_reps));
    kv("run.out", cfg.out_dir);
    kv("run.threads", std::to_string(cfg.threads));
    if (!cfg.scenario_x.empty()) kv("scenario.x", list_to_string(cfg.scenario_x));
    if (!cfg.scenario_p_minus.empty()) kv("scenario.p_minus", list_to_string(cfg.scenario_p_minus));
    if (!cfg.scenario_p_plus.empty()) kv("scenario.p_plus", list_to_string(cfg.scenario_p_plus));
    kv("scenario.n_max", std::to_string(cfg.scenario_n_max));
    kv("scenario.n_interim", std::to_string(cfg.scenario_n_interim));
    return s;
}

// ---------------------------------------------------------------------------
// JSON report schema (format_version 1)

using json = nlohmann::ordered_json;

inline void to_json(json& j, const IntervalDecision& d)
{
    j = json{{"a_all", d.a_all},
             {"a_plus", d.a_plus},
             {"a_minus", d.a_minus},
             {"chosen_model", to_string(d.chosen)},
             {"cell_probability", d.cell_probability},
             {"prob_m2", d.prob_m2},
             {"m1_indices_from_prior", d.m1_from_prior},
             {"m2_indices_from_prior", d.m2_from_prior}};
}

inline void from_json(const json& j, IntervalDecision& d)
{
    d.a_all = j.at("a_all").get<std::size_t>();
    d.a_plus = j.at("a_plus").get<std::size_t>();
    d.a_minus = j.at("a_minus").get<std::size_t>();
    d.chosen = sub_model_from_string(j.at("chosen_model").get<std::string>());
    d.cell_probability = j.at("cell_probability").get<double>();
    d.prob_m2 = j.at("prob_m2").get<double>();
    d.m1_from_prior = j.at("m1_indices_from_prior").get<bool>();
    d.m2_from_prior = j.at("m2_indices_from_prior").get<bool>();
}

namespace io_detail {

template <class T>
json optional_to_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from_json(const json& j)
{
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

}  // namespace io_detail

inline void to_json(json& j, const ThresholdEstimate& t)
{
    j = json{{"t_hat", io_detail::optional_to_json(t.t_hat)},
             {"no_subgroup", !t.t_hat.has_value()},
             {"expected_loss", t.expected_loss},
             {"obs_size", t.obs_size},
             {"m2_draws", t.m2_draws}};
}

inline void from_json(const json& j, ThresholdEstimate& t)
{
    t.t_hat = io_detail::optional_from_json<double>(j.at("t_hat"));
    t.expected_loss = j.at("expected_loss").get<double>();
    t.obs_size = j.at("obs_size").get<std::size_t>();
    t.m2_draws = j.at("m2_draws").get<std::size_t>();
}

inline void to_json(json& j, const StageResult& s)
{
    j = json{{"n_patients", s.n_patients},
             {"intervals", s.intervals},
             {"threshold", s.threshold},
             {"subgroup_flag", s.subgroup_flag},
             {"final_action", to_string(s.final_action)},
             {"interim_action", to_string(s.interim_action)}};
}

inline void from_json(const json& j, StageResult& s)
{
    s.n_patients = j.at("n_patients").get<std::size_t>();
    s.intervals = j.at("intervals").get<IntervalDecision>();
    s.threshold = j.at("threshold").get<ThresholdEstimate>();
    s.subgroup_flag = j.at("subgroup_flag").get<bool>();
    s.final_action = final_action_from_string(j.at("final_action").get<std::string>());
    s.interim_action = interim_action_from_string(j.at("interim_action").get<std::string>());
}

inline void to_json(json& j, const IndicationReport& r)
{
    j = json{{"label", r.label},
             {"n_enrolled", r.n_enrolled},
             {"interim", r.interim ? json(*r.interim) : json(nullptr)},
             {"final", r.final_stage ? json(*r.final_stage) : json(nullptr)},
             {"stopped_at_interim", r.stopped_at_interim},
             {"enrichment_cutoff", io_detail::optional_to_json(r.enrichment_cutoff)},
             {"enrichment_fallback", r.enrichment_fallback},
             {"threshold_fixed", r.threshold_fixed}};
}

inline void from_json(const json& j, IndicationReport& r)
{
    r.label = j.at("label").get<std::string>();
    r.n_enrolled = j.at("n_enrolled").get<std::size_t>();
    r.interim = io_detail::optional_from_json<StageResult>(j.at("interim"));
    r.final_stage = io_detail::optional_from_json<StageResult>(j.at("final"));
    r.stopped_at_interim = j.at("stopped_at_interim").get<bool>();
    r.enrichment_cutoff = io_detail::optional_from_json<double>(j.at("enrichment_cutoff"));
    r.enrichment_fallback = j.at("enrichment_fallback").get<bool>();
    r.threshold_fixed = j.at("threshold_fixed").get<bool>();
}

inline void to_json(json& j, const TrialReport& r)
{
    j = json{{"format_version", r.format_version},
             {"variant", r.variant},
             {"scenario", r.scenario},
             {"seed", r.seed},
             {"indications", r.indications}};
}

inline void from_json(const json& j, TrialReport& r)
{
    r.format_version = j.at("format_version").get<int>();
    if (r.format_version != report_format_version)
        throw data_error("unsupported report format_version " + std::to_string(r.format_version));
    r.variant = j.at("variant").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.indications = j.at("indications").get<std::vector<IndicationReport>>();
}

inline std::string report_to_json(const TrialReport& r) { return json(r).dump(2) + "\n"; }

inline TrialReport report_from_json(std::string_view text)
{
    try {
        return json::parse(text).get<TrialReport>();
    } catch (const json::exception& e) {
        throw data_error(std::string("malformed report: ") + e.what());
    }
}

inline std::string optional_csv(const std::optional<double>& v)
{
    return v ? io_detail::format_double(*v) : std::string("NA");
}

// One row per indication of the analysis summary.
inline std::string report_summary_csv(const TrialReport& r)
{
    std::string s =
        "variant,source,seed,indication,n_enrolled,interim_action,final_action,a_all,a_plus,"
        "a_minus,chosen_model,prob_m2,subgroup_flag,t_hat,obs_size\n";
    for (const auto& ind : r.indications) {
        const StageResult* st = ind.final_stage ? &*ind.final_stage : (ind.interim ? &*ind.interim : nullptr);
        if (st == nullptr) continue;
        s += r.variant + "," + r.scenario + "," + std::to_string(r.seed) + "," + ind.label + "," +
             std::to_string(ind.n_enrolled) + "," +
             (ind.interim ? std::string(to_string(ind.interim->interim_action)) : "NA") + "," +
             (ind.final_stage ? std::string(to_string(ind.final_stage->final_action)) : "NA") + "," +
             std::to_string(st->intervals.a_all) + "," + std::to_string(st->intervals.a_plus) +
             "," + std::to_string(st->intervals.a_minus) + "," +
             std::string(to_string(st->intervals.chosen)) + "," +
             io_detail::format_double(st->intervals.prob_m2) + "," +
             (st->subgroup_flag ? "1" : "0") + "," + optional_csv(st->threshold.t_hat) + "," +
             std::to_string(st->threshold.obs_size) + "\n";
    }
    return s;
}

/// report.json plus summary.csv in `dir` (created if missing).
inline std::vector<std::filesystem::path> write_report(const TrialReport& report,
                                                       const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto json_path = dir / "report.json";
    const auto csv_path = dir / "summary.csv";
    io_detail::write_file(json_path, report_to_json(report));
    io_detail::write_file(csv_path, report_summary_csv(report));
    return {json_path, csv_path};
}

inline TrialReport read_report(const std::filesystem::path& path)
{
    return report_from_json(io_detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Operating-characteristic tables

inline std::string oc_decisions_header()
{
    return "scenario,variant,reps,base_seed,indication,true_x,p_minus,p_plus,optimal,stage,action,"
           "percent\n";
}

// Long-format action percentages (final and interim) for one run.
inline std::string oc_decisions_csv(const OperatingCharacteristics& oc, const Scenario& sc)
{
    std::string s;
    for (std::size_t i = 0; i < oc.indications.size(); ++i) {
        const auto& si = sc.indications.at(i);
        const std::string prefix =
            oc.scenario + "," + oc.variant + "," + std::to_string(oc.n_reps) + "," +
            std::to_string(oc.base_seed) + "," + std::to_string(i + 1) + "," +
            io_detail::format_double(si.x) + "," + io_detail::format_double(si.p_minus) + "," +
            io_detail::format_double(si.p_plus) + "," +
            (si.optimal ? std::string(to_string(*si.optimal)) : "NA") + ",";
        for (auto a : all_final_actions)
            s += prefix + "final," + std::string(to_string(a)) + "," +
                 io_detail::format_double(oc.final_percent(i, a)) + "\n";
        for (auto a : all_interim_actions)
            s += prefix + "interim," + std::string(to_string(a)) + "," +
                 io_detail::format_double(oc.interim_percent(i, a)) + "\n";
        s += prefix + "final,subgroup_flag," + io_detail::format_double(oc.flag_percent(i)) + "\n";
    }
    return s;
}

inline std::string oc_thresholds_header()
{
    return "scenario,variant,reps,base_seed,indication,true_x,replicate,t_hat\n";
}

// t_hat per replicate, for violin plots.
inline std::string oc_thresholds_csv(const OperatingCharacteristics& oc, const Scenario& sc)
{
    std::string s;
    for (std::size_t i = 0; i < oc.indications.size(); ++i) {
        const auto& th = oc.indications[i].t_hats;
        for (std::size_t r = 0; r < th.size(); ++r)
            s += oc.scenario + "," + oc.variant + "," + std::to_string(oc.n_reps) + "," +
                 std::to_string(oc.base_seed) + "," + std::to_string(i + 1) + "," +
                 io_detail::format_double(sc.indications.at(i).x) + "," + std::to_string(r) + "," +
                 optional_csv(th[r]) + "\n";
    }
    return s;
}

inline json oc_to_json(const OperatingCharacteristics& oc, const Scenario& sc)
{
    json inds = json::array();
    for (std::size_t i = 0; i < oc.indications.size(); ++i) {
        const auto& si = sc.indications.at(i);
        json fin = json::object();
        for (auto a : all_final_actions) fin[std::string(to_string(a))] = oc.final_percent(i, a);
        json inter = json::object();
        for (auto a : all_interim_actions)
            inter[std::string(to_string(a))] = oc.interim_percent(i, a);
        json th = json::array();
        for (const auto& t : oc.indications[i].t_hats) th.push_back(io_detail::optional_to_json(t));
        const double med = oc.median_threshold_error(i, si.x);
        inds.push_back(json{{"indication", i + 1},
                            {"true_x", si.x},
                            {"p_minus", si.p_minus},
                            {"p_plus", si.p_plus},
                            {"optimal", si.optimal ? json(std::string(to_string(*si.optimal))) : json(nullptr)},
                            {"final_percent", fin},
                            {"interim_percent", inter},
                            {"subgroup_flag_percent", oc.flag_percent(i)},
                            {"median_abs_threshold_error", std::isnan(med) ? json(nullptr) : json(med)},
                            {"t_hat", th}});
    }
    return json{{"format_version", report_format_version},
                {"scenario", oc.scenario},
                {"variant", oc.variant},
                {"reps", oc.n_reps},
                {"base_seed", oc.base_seed},
                {"indications", inds}};
}

}  // namespace simba
