#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "math.hpp"
#include "model.hpp"
#include "sampler.hpp"

namespace simba {

enum class FinalAction { S, INC, RA, RP };
enum class InterimAction { S, EA, EP };

inline constexpr std::array<FinalAction, 4> all_final_actions{FinalAction::S, FinalAction::INC,
                                                              FinalAction::RA, FinalAction::RP};
inline constexpr std::array<InterimAction, 3> all_interim_actions{
    InterimAction::S, InterimAction::EA, InterimAction::EP};

inline std::string_view to_string(FinalAction a) noexcept
{
    switch (a) {
        case FinalAction::S: return "S";
        case FinalAction::INC: return "INC";
        case FinalAction::RA: return "RA";
        case FinalAction::RP: return "RP";
    }
    return "?";
}

inline std::string_view to_string(InterimAction a) noexcept
{
    switch (a) {
        case InterimAction::S: return "S";
        case InterimAction::EA: return "EA";
        case InterimAction::EP: return "EP";
    }
    return "?";
}

inline std::string_view to_string(SubModel m) noexcept { return m == SubModel::m1 ? "M1" : "M2"; }

inline FinalAction final_action_from_string(std::string_view s)
{
    for (auto a : all_final_actions)
        if (to_string(a) == s) return a;
    throw data_error("unknown final action '" + std::string(s) + "'");
}

inline InterimAction interim_action_from_string(std::string_view s)
{
    for (auto a : all_interim_actions)
        if (to_string(a) == s) return a;
    throw data_error("unknown interim action '" + std::string(s) + "'");
}

inline SubModel sub_model_from_string(std::string_view s)
{
    if (s == "M1") return SubModel::m1;
    if (s == "M2") return SubModel::m2;
    throw data_error("unknown sub-model '" + std::string(s) + "'");
}

/// Equal-width partition of the response-rate range (0, 1).
///
/// Interval k (1-based) is (c_{k-1}, c_k]; the last one is (c_{K-1}, 1).
/// LRV = c_{k1} and TV = c_{k2} exactly.
struct IntervalPartition {
    std::vector<double> cutpoints;  // c_0 = 0 < ... < c_K = 1
    std::size_t k1 = 0;
    std::size_t k2 = 0;
    double epsilon = 0.0;

    std::size_t intervals() const noexcept { return cutpoints.size() - 1; }
    double lrv() const { return cutpoints.at(k1); }
    double tv() const { return cutpoints.at(k2); }

    // Rates within 1e-12 above a cutpoint are snapped onto it, so a rate
    // that equals a cutpoint up to rounding lands in the interval it closes.
    std::size_t interval_index(double p) const noexcept
    {
        const std::size_t K = intervals();
        auto it = std::lower_bound(cutpoints.begin() + 1, cutpoints.end() - 1, p - 1e-12);
        const auto k = static_cast<std::size_t>(it - cutpoints.begin());
        return std::clamp<std::size_t>(k, 1, K);
    }

    // 0: at or below LRV, 1: up to TV, 2: above TV.
    int band(std::size_t k) const noexcept { return k <= k1 ? 0 : (k <= k2 ? 1 : 2); }
};

namespace detail {

inline long to_hundredths(double v, const char* what)
{
    const double scaled = v * 100.0;
    const double r = std::round(scaled);
    if (std::abs(scaled - r) > 1e-6)
        throw usage_error(std::string(what) + " must have at most two decimals");
    return static_cast<long>(r);
}

}  // namespace detail

/// Partition for one indication. Without an override the grain is the
/// largest two-decimal common divisor of LRV, TV - LRV and 1 - TV.
inline IntervalPartition build_partition(double lrv, double tv,
                                         std::optional<double> epsilon_override = std::nullopt)
{
    if (!(lrv > 0.0 && lrv < 1.0) || !(tv > 0.0 && tv < 1.0))
        throw usage_error("LRV and TV must lie in (0, 1)");
    if (lrv >= tv) throw usage_error("LRV must be smaller than TV");
    const long L = detail::to_hundredths(lrv, "LRV");
    const long T = detail::to_hundredths(tv, "TV");
    long E = 0;
    if (epsilon_override) {
        if (!(*epsilon_override > 0.0)) throw usage_error("epsilon must be positive");
        E = detail::to_hundredths(*epsilon_override, "epsilon");
        if (E <= 0) throw usage_error("epsilon must be at least 0.01");
        if (L % E != 0 || (T - L) % E != 0)
            throw usage_error("epsilon must divide LRV and TV - LRV");
    } else {
        E = std::gcd(std::gcd(L, T - L), 100 - T);
    }

    IntervalPartition part;
    for (long k = 0; k * E < 100; ++k) part.cutpoints.push_back(static_cast<double>(k * E) / 100.0);
    part.cutpoints.push_back(1.0);
    part.k1 = static_cast<std::size_t>(L / E);
    part.k2 = static_cast<std::size_t>(T / E);
    part.epsilon = static_cast<double>(E) / 100.0;
    return part;
}

/// Bayes interval choice under the 0/1 loss for one indication.
struct IntervalDecision {
    std::size_t a_all = 0;
    std::size_t a_plus = 0;
    std::size_t a_minus = 0;
    SubModel chosen = SubModel::m1;
    double cell_probability = 0.0;  // posterior mass of the winning cell
    double prob_m2 = 0.0;
    // The losing sub-model's indices come from its conditional mode. When a
    // sub-model has no draws at all they come from its prior center instead.
    bool m1_from_prior = false;
    bool m2_from_prior = false;

    bool operator==(const IntervalDecision&) const = default;
};

/// Mode of the posterior over {(M1, k)} and {(M2, k+, k-)} cells, using the
/// joint (k+, k-) histogram under M2. Ties go to M1, then to lower indices.
inline IntervalDecision optimal_intervals(const PosteriorSamples& samples, std::size_t i,
                                          const IntervalPartition& partition)
{
    if (samples.draws.empty()) throw contract_error("empty posterior sample");
    const std::size_t K = partition.intervals();
    std::vector<std::size_t> q1(K + 1, 0);
    std::vector<std::size_t> q2((K + 1) * (K + 1), 0);
    std::size_t n2 = 0;
    for (const auto& d : samples.draws) {
        const auto& s = d.indications.at(i);
        if (s.model == SubModel::m1) {
            ++q1[partition.interval_index(s.p_all())];
        } else {
            ++n2;
            ++q2[partition.interval_index(s.p_plus()) * (K + 1) +
                 partition.interval_index(s.p_minus())];
        }
    }
    const std::size_t n1 = samples.draws.size() - n2;

    std::size_t best1 = 1;
    for (std::size_t k = 2; k <= K; ++k)
        if (q1[k] > q1[best1]) best1 = k;
    std::size_t best_plus = 1;
    std::size_t best_minus = 1;
    for (std::size_t kp = 1; kp <= K; ++kp)
        for (std::size_t km = 1; km <= K; ++km)
            if (q2[kp * (K + 1) + km] > q2[best_plus * (K + 1) + best_minus]) {
                best_plus = kp;
                best_minus = km;
            }

    IntervalDecision out;
    out.prob_m2 = static_cast<double>(n2) / static_cast<double>(samples.draws.size());
    const auto& pr = samples.priors;
    if (n1 == 0) {
        best1 = partition.interval_index(math::invlogit(pr.mu_theta));
        out.m1_from_prior = true;
    }
    if (n2 == 0) {
        best_plus =
            partition.interval_index(math::invlogit(pr.mu_theta_minus + pr.a_delta / pr.b_delta));
        best_minus = partition.interval_index(math::invlogit(pr.mu_theta_minus));
        out.m2_from_prior = true;
    }
    out.a_all = best1;
    out.a_plus = best_plus;
    out.a_minus = best_minus;

    const std::size_t c1 = n1 == 0 ? 0 : q1[best1];
    const std::size_t c2 = n2 == 0 ? 0 : q2[best_plus * (K + 1) + best_minus];
    out.chosen = c1 >= c2 ? SubModel::m1 : SubModel::m2;
    out.cell_probability =
        static_cast<double>(std::max(c1, c2)) / static_cast<double>(samples.draws.size());
    return out;
}

namespace detail {

inline void check_indices(std::size_t a, std::size_t a_plus, std::size_t a_minus,
                          const IntervalPartition& partition)
{
    const std::size_t K = partition.intervals();
    for (std::size_t k : {a, a_plus, a_minus})
        if (k < 1 || k > K) throw contract_error("interval index out of range");
}

}  // namespace detail

/// Final-analysis mapping from interval indices to a trial action.
inline FinalAction map_final(std::size_t a, std::size_t a_plus, std::size_t a_minus,
                             const IntervalPartition& partition)
{
    detail::check_indices(a, a_plus, a_minus, partition);
    const int bp = partition.band(a_plus);
    const int bm = partition.band(a_minus);
    const int ba = partition.band(a);
    switch (bp) {
        case 0:
            if (bm == 0) return FinalAction::S;
            break;
        case 1:
            if (bm == 0) return ba == 0 ? FinalAction::S : FinalAction::INC;
            if (bm == 1) return FinalAction::INC;
            break;
        default:
            if (bm == 2) return FinalAction::RA;
            return ba == 2 ? FinalAction::RA : FinalAction::RP;
    }
    throw contract_error("infeasible interval combination: positive-subgroup rate below "
                         "negative-subgroup rate");
}

/// Interim mapping; only the LRV cut matters.
inline InterimAction map_interim(std::size_t a, std::size_t a_plus, std::size_t a_minus,
                                 const IntervalPartition& partition)
{
    detail::check_indices(a, a_plus, a_minus, partition);
    const bool plus_above = a_plus > partition.k1;
    const bool minus_above = a_minus > partition.k1;
    const bool all_above = a > partition.k1;
    if (!plus_above && minus_above)
        throw contract_error("infeasible interval combination: positive-subgroup rate below "
                             "negative-subgroup rate");
    if (plus_above && minus_above) return InterimAction::EA;
    if (plus_above && all_above) return InterimAction::EP;
    return InterimAction::S;
}

struct ThresholdLoss {
    double w1 = 0.2;  // weight on the negative-subgroup size penalty
    double w2 = 0.5;  // weight on the positive-subgroup shortfall below TV
    double tv = 0.3;
};

/// Data-only part of the threshold loss at t: w1 * l2 + w2 * l3.
inline double threshold_data_penalty(double t, const IndicationStats& stats,
                                     const ThresholdLoss& loss)
{
    const std::size_t n = stats.size();
    const std::size_t n_neg = stats.count_at_or_below(t);
    const double l2 = n == 0 ? 0.0 : static_cast<double>(n_neg) / static_cast<double>(n);
    const std::size_t n_pos = n - n_neg;
    // empty positive subgroup counts as rate 0
    const double p_pos =
        n_pos == 0 ? 0.0
                   : static_cast<double>(stats.responders() - stats.responders_at_or_below(t)) /
                         static_cast<double>(n_pos);
    const double l3 = p_pos < loss.tv ? 1.0 - p_pos / loss.tv : 0.0;
    return loss.w1 * l2 + loss.w2 * l3;
}

inline double threshold_expected_loss(double t, std::span<const double> x_draws,
                                      const IndicationStats& stats, const ThresholdLoss& loss)
{
    if (x_draws.empty()) throw contract_error("no threshold draws");
    double l1 = 0.0;
    for (double x : x_draws) l1 += 1.0 - std::exp(-std::abs(t - x));
    l1 /= static_cast<double>(x_draws.size());
    return l1 + threshold_data_penalty(t, stats, loss);
}

inline double threshold_expected_loss(double t, std::span<const double> x_draws,
                                      std::span<const Patient> patients, const ThresholdLoss& loss)
{
    return threshold_expected_loss(t, x_draws, IndicationStats(patients), loss);
}

/// Candidate thresholds: midpoints between consecutive distinct biomarker
/// values plus one point 0.01 outside each end of the range.
inline std::vector<double> threshold_candidates(const IndicationStats& stats)
{
    constexpr double sentinel = 0.01;
    std::vector<double> xs(stats.sorted_biomarkers().begin(), stats.sorted_biomarkers().end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> grid;
    if (xs.empty()) return grid;
    grid.reserve(xs.size() + 1);
    grid.push_back(xs.front() - sentinel);
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) grid.push_back(0.5 * (xs[j] + xs[j + 1]));
    grid.push_back(xs.back() + sentinel);
    return grid;
}

struct ThresholdEstimate {
    std::optional<double> t_hat;  // empty: no M2 draws, so no subgroup
    double expected_loss = 0.0;
    std::size_t obs_size = 0;  // patients with biomarker > t_hat
    std::size_t m2_draws = 0;

    bool operator==(const ThresholdEstimate&) const = default;
};

/// Minimizes the posterior expected threshold loss over the candidate grid.
/// Ties go to the smaller threshold.
inline ThresholdEstimate estimate_threshold(const PosteriorSamples& samples, std::size_t i,
                                            const IndicationStats& stats,
                                            const ThresholdLoss& loss)
{
    ThresholdEstimate out;
    const std::vector<double> draws = samples.threshold_draws_m2(i);
    out.m2_draws = draws.size();
    const std::vector<double> grid = threshold_candidates(stats);
    if (draws.empty() || grid.empty()) return out;

    double best = std::numeric_limits<double>::infinity();
    for (double t : grid) {
        const double l = threshold_expected_loss(t, draws, stats, loss);
        if (l < best) {
            best = l;
            out.t_hat = t;
        }
    }
    out.expected_loss = best;
    out.obs_size = stats.size() - stats.count_at_or_below(*out.t_hat);
    return out;
}

inline ThresholdEstimate estimate_threshold(const PosteriorSamples& samples, std::size_t i,
                                            std::span<const Patient> patients,
                                            const ThresholdLoss& loss)
{
    return estimate_threshold(samples, i, IndicationStats(patients), loss);
}

// Strict: exactly lambda does not flag.
inline bool identify_subgroup(const PosteriorSamples& samples, std::size_t i, double lambda)
{
    return samples.prob_m2(i) > lambda;
}

struct IndicationDecisionConfig {
    double lrv = 0.1;
    double tv = 0.3;
    std::optional<double> epsilon;

    bool operator==(const IndicationDecisionConfig&) const = default;
};

struct DecisionConfig {
    std::vector<IndicationDecisionConfig> indications;
    double w1 = 0.2;
    double w2 = 0.5;
    double lambda = 0.98;

    bool operator==(const DecisionConfig&) const = default;

    static DecisionConfig uniform(std::size_t n, double lrv = 0.1, double tv = 0.3)
    {
        DecisionConfig c;
        c.indications.assign(n, IndicationDecisionConfig{lrv, tv, std::nullopt});
        return c;
    }

    ThresholdLoss threshold_loss(std::size_t i) const
    {
        return ThresholdLoss{w1, w2, indications.at(i).tv};
    }

    IntervalPartition partition(std::size_t i) const
    {
        const auto& d = indications.at(i);
        return build_partition(d.lrv, d.tv, d.epsilon);
    }

    void validate(std::size_t n_indications) const
    {
        if (indications.size() != n_indications)
            throw usage_error("decision settings cover " + std::to_string(indications.size()) +
                              " indications, data has " + std::to_string(n_indications));
        if (!(w1 >= 0.0) || !(w2 >= 0.0) || !std::isfinite(w1) || !std::isfinite(w2))
            throw usage_error("loss weights must be nonnegative");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw usage_error("lambda must lie in [0, 1]");
        for (std::size_t i = 0; i < indications.size(); ++i) (void)partition(i);
    }
};

}  // namespace simba
