#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "math.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace simba {

// Random-walk proposal standard deviations. delta and sigma_x move on the
// log scale.
struct ProposalScales {
    double theta = 0.5;
    double theta_minus = 0.5;
    double log_delta = 0.5;
    double x = 0.5;
    double log_sigma_x = 0.5;

    bool operator==(const ProposalScales&) const = default;
};

struct SamplerConfig {
    std::size_t total_iters = 4000;
    std::size_t burn_in = 2000;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    ProposalScales proposal_sds;
    bool adapt = true;  // Robbins-Monro scaling during burn-in only
    // Per-indication thresholds held fixed (second pass of the two-step
    // analysis). Empty means every x_i is sampled.
    std::vector<std::optional<double>> fixed_thresholds;

    bool operator==(const SamplerConfig&) const = default;

    std::size_t expected_draws() const noexcept { return (total_iters - burn_in) / thin; }

    bool threshold_fixed(std::size_t i) const noexcept
    {
        return i < fixed_thresholds.size() && fixed_thresholds[i].has_value();
    }

    bool all_thresholds_fixed(std::size_t n_indications) const noexcept
    {
        for (std::size_t i = 0; i < n_indications; ++i)
            if (!threshold_fixed(i)) return false;
        return n_indications > 0;
    }

    void validate() const
    {
        if (total_iters == 0) throw usage_error("sampler total_iters must be positive");
        if (burn_in >= total_iters) throw usage_error("sampler burn_in must be < total_iters");
        if (thin == 0) throw usage_error("sampler thin must be positive");
        if (expected_draws() == 0) throw usage_error("sampler settings retain no draws");
        for (double sd : {proposal_sds.theta, proposal_sds.theta_minus, proposal_sds.log_delta,
                          proposal_sds.x, proposal_sds.log_sigma_x})
            if (!(sd > 0.0) || !std::isfinite(sd))
                throw usage_error("proposal standard deviations must be positive");
        for (const auto& f : fixed_thresholds)
            if (f && !std::isfinite(*f)) throw usage_error("fixed threshold must be finite");
    }
};

enum class Block : std::size_t { theta, theta_minus, log_delta, x, x_independence, log_sigma_x };
inline constexpr std::size_t n_blocks = 6;

inline const char* block_name(Block b) noexcept
{
    switch (b) {
        case Block::theta: return "theta";
        case Block::theta_minus: return "theta_minus";
        case Block::log_delta: return "log_delta";
        case Block::x: return "x";
        case Block::x_independence: return "x_independence";
        case Block::log_sigma_x: return "log_sigma_x";
    }
    return "?";
}

struct AcceptanceCounter {
    std::uint64_t accepted = 0;
    std::uint64_t proposed = 0;

    double rate() const noexcept
    {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
    bool operator==(const AcceptanceCounter&) const = default;
};

// Post-burn-in acceptance of each Metropolis-Hastings block, pooled over
// indications.
struct AcceptanceStats {
    std::array<AcceptanceCounter, n_blocks> blocks{};

    AcceptanceCounter& operator[](Block b) noexcept { return blocks[static_cast<std::size_t>(b)]; }
    const AcceptanceCounter& operator[](Block b) const noexcept
    {
        return blocks[static_cast<std::size_t>(b)];
    }
    bool operator==(const AcceptanceStats&) const = default;
};

/// Retained draws of one chain plus what is needed to reproduce it.
struct PosteriorSamples {
    std::vector<ModelState> draws;
    AcceptanceStats acceptance;
    PriorConfig priors;
    SamplerConfig config;

    std::size_t n_indications() const noexcept
    {
        return draws.empty() ? 0 : draws.front().indications.size();
    }

    // Fraction of draws with M_i = M2.
    double prob_m2(std::size_t i) const
    {
        if (draws.empty()) throw contract_error("empty posterior sample");
        std::size_t n = 0;
        for (const auto& d : draws) n += d.indications.at(i).model == SubModel::m2;
        return static_cast<double>(n) / static_cast<double>(draws.size());
    }

    // Threshold draws from iterations where indication i sits in M2.
    std::vector<double> threshold_draws_m2(std::size_t i) const
    {
        std::vector<double> out;
        for (const auto& d : draws) {
            const auto& s = d.indications.at(i);
            if (s.model == SubModel::m2) out.push_back(s.x);
        }
        return out;
    }

    bool operator==(const PosteriorSamples&) const = default;
};

/// Outcome of one Metropolis-Hastings step.
struct MhStep {
    bool proposed = false;
    bool accepted = false;
    double accept_prob = 0.0;
};

namespace detail {

inline bool mh_accept(double log_ratio, Rng& rng, MhStep& step)
{
    step.proposed = true;
    step.accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    step.accepted = log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio;
    return step.accepted;
}

// Conditional prior of x_i given the current hyperparameters.
inline double threshold_prior_mean(const ModelState& state, const PriorConfig& priors)
{
    if (const auto* f = std::get_if<FixedNoBorrowPrior>(&priors.threshold_prior)) return f->mu_x0;
    return state.mu_x;
}

inline double threshold_prior_sd(const ModelState& state, const PriorConfig& priors)
{
    if (const auto* f = std::get_if<FixedNoBorrowPrior>(&priors.threshold_prior)) return f->sigma_x0;
    return state.sigma_x;
}

}  // namespace detail

// Exact Gibbs draw p_M ~ Beta(a + #M1, b + #M2).
inline void update_p_m(ModelState& state, const PriorConfig& priors, Rng& rng)
{
    double n1 = 0.0;
    double n2 = 0.0;
    for (const auto& s : state.indications) (s.model == SubModel::m1 ? n1 : n2) += 1.0;
    double p = rng.beta(priors.a + n1, priors.b + n2);
    // Beta draws can round to the closed endpoints for tiny shape parameters.
    p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - 0x1p-53);
    state.p_m = p;
}

/// Probability of M1 in the full conditional of M_i. With pseudo-priors
/// equal to the priors, only the active-block likelihoods and p_M remain.
inline double prob_m1_conditional(const ModelState& state, std::size_t i,
                                  const IndicationStats& stats)
{
    const auto& s = state.indications[i];
    const double l1 = std::log(state.p_m) + stats.log_lik_m1(s.theta);
    const double l2 = std::log1p(-state.p_m) + stats.log_lik_m2(s.theta_minus, s.delta, s.x);
    const double m = std::max(l1, l2);
    const double e1 = std::exp(l1 - m);
    const double e2 = std::exp(l2 - m);
    return e1 / (e1 + e2);
}

inline void update_model(ModelState& state, std::size_t i, const IndicationStats& stats, Rng& rng)
{
    const double p1 = prob_m1_conditional(state, i, stats);
    state.indications[i].model = rng.uniform() < p1 ? SubModel::m1 : SubModel::m2;
}

// theta_i: random-walk MH when M1 is active, prior refresh otherwise.
inline MhStep update_theta(ModelState& state, std::size_t i, const IndicationStats& stats,
                           const PriorConfig& priors, double proposal_sd, Rng& rng)
{
    auto& s = state.indications[i];
    MhStep step;
    if (s.model != SubModel::m1) {
        s.theta = rng.normal(priors.mu_theta, priors.sigma_theta);
        return step;
    }
    const double cur = s.theta;
    const double prop = cur + proposal_sd * rng.normal();
    const double log_ratio =
        stats.log_lik_m1(prop) - stats.log_lik_m1(cur) +
        math::normal_log_pdf(prop, priors.mu_theta, priors.sigma_theta) -
        math::normal_log_pdf(cur, priors.mu_theta, priors.sigma_theta);
    if (detail::mh_accept(log_ratio, rng, step)) s.theta = prop;
    return step;
}

// (theta_i-, log delta_i) as two MH steps when M2 is active; prior refresh
// otherwise. Returns the theta_minus step and the log-delta step.
inline std::array<MhStep, 2> update_theta_minus_delta(ModelState& state, std::size_t i,
                                                      const IndicationStats& stats,
                                                      const PriorConfig& priors,
                                                      double sd_theta_minus, double sd_log_delta,
                                                      Rng& rng)
{
    auto& s = state.indications[i];
    std::array<MhStep, 2> steps{};
    if (s.model != SubModel::m2) {
        s.theta_minus = rng.normal(priors.mu_theta_minus, priors.sigma_theta_minus);
        s.delta = rng.gamma(priors.a_delta, priors.b_delta);
        if (!(s.delta > 0.0)) s.delta = std::numeric_limits<double>::min();
        return steps;
    }

    {
        const double cur = s.theta_minus;
        const double prop = cur + sd_theta_minus * rng.normal();
        const double log_ratio =
            stats.log_lik_m2(prop, s.delta, s.x) - stats.log_lik_m2(cur, s.delta, s.x) +
            math::normal_log_pdf(prop, priors.mu_theta_minus, priors.sigma_theta_minus) -
            math::normal_log_pdf(cur, priors.mu_theta_minus, priors.sigma_theta_minus);
        if (detail::mh_accept(log_ratio, rng, steps[0])) s.theta_minus = prop;
    }
    {
        // target in eta = log delta carries the Jacobian e^eta
        const double cur_eta = std::log(s.delta);
        const double prop_eta = cur_eta + sd_log_delta * rng.normal();
        const double prop = std::exp(prop_eta);
        if (prop > 0.0 && std::isfinite(prop)) {
            const double log_ratio =
                stats.log_lik_m2(s.theta_minus, prop, s.x) -
                stats.log_lik_m2(s.theta_minus, s.delta, s.x) +
                math::gamma_log_pdf(prop, priors.a_delta, priors.b_delta) -
                math::gamma_log_pdf(s.delta, priors.a_delta, priors.b_delta) + prop_eta - cur_eta;
            if (detail::mh_accept(log_ratio, rng, steps[1])) s.delta = prop;
        } else {
            steps[1].proposed = true;
        }
    }
    return steps;
}

/// x_i: when M2 is active, a Gaussian random-walk MH step followed by an
/// independence MH step proposing from the conditional prior of x_i (the
/// likelihood is piecewise constant in x, so the second move lets the chain
/// jump between distant data gaps). Prior refresh when M1 is active.
inline std::array<MhStep, 2> update_x(ModelState& state, std::size_t i,
                                      const IndicationStats& stats, const PriorConfig& priors,
                                      double proposal_sd, Rng& rng)
{
    auto& s = state.indications[i];
    std::array<MhStep, 2> steps{};
    const double mean = detail::threshold_prior_mean(state, priors);
    const double sd = detail::threshold_prior_sd(state, priors);
    if (s.model != SubModel::m2) {
        s.x = rng.normal(mean, sd);
        return steps;
    }
    {
        const double cur = s.x;
        const double prop = cur + proposal_sd * rng.normal();
        const double log_ratio = stats.log_lik_m2(s.theta_minus, s.delta, prop) -
                                 stats.log_lik_m2(s.theta_minus, s.delta, cur) +
                                 math::normal_log_pdf(prop, mean, sd) -
                                 math::normal_log_pdf(cur, mean, sd);
        if (detail::mh_accept(log_ratio, rng, steps[0])) s.x = prop;
    }
    {
        const double prop = rng.normal(mean, sd);
        const double log_ratio = stats.log_lik_m2(s.theta_minus, s.delta, prop) -
                                 stats.log_lik_m2(s.theta_minus, s.delta, s.x);
        if (detail::mh_accept(log_ratio, rng, steps[1])) s.x = prop;
    }
    return steps;
}

// Normal-normal Gibbs draw of mu_x given every x_i and sigma_x.
inline void update_mu_x(ModelState& state, const PriorConfig& priors, Rng& rng)
{
    if (!priors.hierarchical()) return;
    const double n = static_cast<double>(state.indications.size());
    double sum = 0.0;
    for (const auto& s : state.indications) sum += s.x;
    const double var_x = state.sigma_x * state.sigma_x;
    const double precision = 1.0 / (priors.sigma * priors.sigma) + n / var_x;
    const double mean = (sum / var_x) / precision;
    state.mu_x = rng.normal(mean, 1.0 / std::sqrt(precision));
}

// Shape and scale of the conjugate inverse-gamma conditional of sigma_x^2.
inline std::array<double, 2> sigma_x_sq_conditional(const ModelState& state,
                                                    const InverseGammaPrior& ig)
{
    double ss = 0.0;
    for (const auto& s : state.indications) ss += (s.x - state.mu_x) * (s.x - state.mu_x);
    return {ig.shape + 0.5 * static_cast<double>(state.indications.size()), ig.scale + 0.5 * ss};
}

// sigma_x: MH on log sigma_x under the half-Cauchy, exact Gibbs under the
// inverse-gamma, no-op without borrowing.
inline MhStep update_sigma_x(ModelState& state, const PriorConfig& priors, double proposal_sd,
                             Rng& rng)
{
    MhStep step;
    if (const auto* ig = std::get_if<InverseGammaPrior>(&priors.threshold_prior)) {
        const auto [shape, scale] = sigma_x_sq_conditional(state, *ig);
        state.sigma_x = std::sqrt(rng.inverse_gamma(shape, scale));
        return step;
    }
    const auto* hc = std::get_if<HalfCauchyPrior>(&priors.threshold_prior);
    if (hc == nullptr) return step;

    auto log_target = [&](double log_sd) {
        const double sd = std::exp(log_sd);
        double lt = math::half_cauchy_log_pdf(sd, hc->gamma) + log_sd;
        for (const auto& s : state.indications) lt += math::normal_log_pdf(s.x, state.mu_x, sd);
        return lt;
    };
    const double cur = std::log(state.sigma_x);
    const double prop = cur + proposal_sd * rng.normal();
    if (!std::isfinite(std::exp(prop)) || std::exp(prop) <= 0.0) {
        step.proposed = true;
        return step;
    }
    if (detail::mh_accept(log_target(prop) - log_target(cur), rng, step))
        state.sigma_x = std::exp(prop);
    return step;
}

/// Deterministic starting point: every block at a prior center, thresholds
/// at the indication's median biomarker.
inline ModelState initial_state(const TrialData& data, const PriorConfig& priors,
                                const SamplerConfig& config)
{
    ModelState st;
    st.p_m = priors.a / (priors.a + priors.b);
    const double x_center = [&] {
        if (const auto* f = std::get_if<FixedNoBorrowPrior>(&priors.threshold_prior)) return f->mu_x0;
        return 0.0;
    }();
    for (std::size_t i = 0; i < data.size(); ++i) {
        IndicationState s;
        s.model = SubModel::m1;
        s.theta = priors.mu_theta;
        s.theta_minus = priors.mu_theta_minus;
        s.delta = priors.a_delta / priors.b_delta;
        const auto& pts = data.indications[i].patients;
        if (pts.empty()) {
            s.x = x_center;
        } else {
            std::vector<double> xs;
            xs.reserve(pts.size());
            for (const auto& p : pts) xs.push_back(p.biomarker);
            std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2), xs.end());
            s.x = xs[xs.size() / 2];
        }
        if (config.threshold_fixed(i)) s.x = *config.fixed_thresholds[i];
        st.indications.push_back(s);
    }
    std::visit(
        [&](const auto& tp) {
            using T = std::decay_t<decltype(tp)>;
            if constexpr (std::is_same_v<T, HalfCauchyPrior>) {
                st.mu_x = 0.0;
                st.sigma_x = tp.gamma;
            } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                st.mu_x = 0.0;
                st.sigma_x = 1.0;
            } else {
                st.mu_x = tp.mu_x0;
                st.sigma_x = tp.sigma_x0;
            }
        },
        priors.threshold_prior);
    return st;
}

/// Metropolis-within-Gibbs over the product space of both sub-models.
///
/// Sweep order: p_M, then per indication M_i, theta_i, (theta_i-, delta_i),
/// x_i, then mu_x and sigma_x. Proposal scales are tuned per indication and
/// block toward 0.3 acceptance during burn-in and frozen afterwards.
inline PosteriorSamples run_chain(const TrialData& data, const PriorConfig& priors,
                                  const SamplerConfig& config)
{
    data.validate();
    priors.validate();
    config.validate();

    const std::size_t n_ind = data.size();
    std::vector<IndicationStats> stats;
    stats.reserve(n_ind);
    for (const auto& ind : data.indications) stats.emplace_back(ind.patients);

    Rng rng(config.seed);
    ModelState state = initial_state(data, priors, config);

    // log proposal sd per indication and block
    constexpr double target_accept = 0.3;
    const auto& sds = config.proposal_sds;
    std::vector<std::array<double, 4>> log_sd(
        n_ind, {std::log(sds.theta), std::log(sds.theta_minus), std::log(sds.log_delta),
                std::log(sds.x)});
    double log_sd_sigma = std::log(sds.log_sigma_x);
    const double log_sd_min = std::log(1e-4);
    const double log_sd_max = std::log(1e4);

    const bool hyper = priors.hierarchical() && !config.all_thresholds_fixed(n_ind);

    PosteriorSamples out;
    out.priors = priors;
    out.config = config;
    out.draws.reserve(config.expected_draws());

    for (std::size_t iter = 0; iter < config.total_iters; ++iter) {
        const bool burning = iter < config.burn_in;
        const bool tune = burning && config.adapt;
        const double gain = 1.0 / std::pow(static_cast<double>(iter) + 1.0, 0.6);

        auto record = [&](Block b, const MhStep& step, double* log_scale) {
            if (!step.proposed) return;
            if (tune && log_scale != nullptr && b != Block::x_independence)
                *log_scale = std::clamp(*log_scale + gain * (step.accept_prob - target_accept),
                                        log_sd_min, log_sd_max);
            if (!burning || config.burn_in == 0) {
                auto& c = out.acceptance[b];
                ++c.proposed;
                c.accepted += step.accepted ? 1 : 0;
            }
        };

        update_p_m(state, priors, rng);
        for (std::size_t i = 0; i < n_ind; ++i) {
            update_model(state, i, stats[i], rng);
            auto& ls = log_sd[i];
            record(Block::theta,
                   update_theta(state, i, stats[i], priors, std::exp(ls[0]), rng), &ls[0]);
            const auto td = update_theta_minus_delta(state, i, stats[i], priors, std::exp(ls[1]),
                                                     std::exp(ls[2]), rng);
            record(Block::theta_minus, td[0], &ls[1]);
            record(Block::log_delta, td[1], &ls[2]);
            if (!config.threshold_fixed(i)) {
                const auto xs = update_x(state, i, stats[i], priors, std::exp(ls[3]), rng);
                record(Block::x, xs[0], &ls[3]);
                record(Block::x_independence, xs[1], nullptr);
            }
        }
        if (hyper) {
            update_mu_x(state, priors, rng);
            record(Block::log_sigma_x, update_sigma_x(state, priors, std::exp(log_sd_sigma), rng),
                   &log_sd_sigma);
        }

        if (!std::isfinite(state.mu_x) || !std::isfinite(state.sigma_x) || !(state.sigma_x > 0.0))
            throw numerical_error("sampler produced a non-finite hyperparameter at iteration " +
                                  std::to_string(iter));

        if (!burning && (iter - config.burn_in + 1) % config.thin == 0) out.draws.push_back(state);
    }
    return out;
}

}  // namespace simba
