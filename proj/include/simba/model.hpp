#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "error.hpp"
#include "math.hpp"

namespace simba {

struct Patient {
    double biomarker = 0.0;
    bool response = false;
};

struct Indication {
    std::string label;
    std::vector<Patient> patients;
    std::size_t n_interim = 0;  // patients enrolled before the interim look
    std::size_t n_max = 0;      // maximum enrollment
};

struct TrialData {
    std::vector<Indication> indications;

    std::size_t size() const noexcept { return indications.size(); }

    void validate() const
    {
        if (indications.empty()) throw data_error("trial data has no indications");
        for (const auto& ind : indications) {
            if (ind.n_interim == 0 || ind.n_interim > ind.n_max)
                throw data_error("indication '" + ind.label +
                                 "': need 0 < interim size <= maximum size");
            if (ind.patients.size() > ind.n_max)
                throw data_error("indication '" + ind.label +
                                 "': more patients than the maximum size");
            for (const auto& p : ind.patients)
                if (!std::isfinite(p.biomarker))
                    throw data_error("indication '" + ind.label + "': non-finite biomarker");
        }
    }
};

// Priors on the threshold hierarchy (mu_x, sigma_x).

struct HalfCauchyPrior {
    double gamma = 2.5;  // scale of sigma_x ~ Half-Cauchy(0, gamma)
    bool operator==(const HalfCauchyPrior&) const = default;
};

// sigma_x^2 ~ InverseGamma(shape, scale). Placing the prior on the variance
// keeps the update conjugate.
struct InverseGammaPrior {
    double shape = 1.0;
    double scale = 1.0;
    bool operator==(const InverseGammaPrior&) const = default;
};

// x_i ~ N(mu_x0, sigma_x0^2) independently: no borrowing across indications.
struct FixedNoBorrowPrior {
    double mu_x0 = 0.0;
    double sigma_x0 = 3.0;
    bool operator==(const FixedNoBorrowPrior&) const = default;
};

using ThresholdPrior = std::variant<HalfCauchyPrior, InverseGammaPrior, FixedNoBorrowPrior>;

/// Hyperparameters of the two-sub-model response model.
///
/// Defaults are the standard simulation settings. `a_delta` / `b_delta`
/// parameterize delta_i ~ Gamma as shape / rate, so the prior mean of the
/// log-odds gap is a_delta / b_delta (about 1.40 by default).
struct PriorConfig {
    double a = 1.0;  // p_M ~ Beta(a, b)
    double b = 1.0;
    double mu_theta = -2.3;  // theta_i | M1
    double sigma_theta = 10.0;
    double mu_theta_minus = -2.3;  // theta_i- | M2
    double sigma_theta_minus = 2.0;
    double a_delta = 30.0;  // delta_i | M2 (shape, rate)
    double b_delta = 21.5;
    double sigma = 2.0;  // mu_x ~ N(0, sigma^2)
    ThresholdPrior threshold_prior = HalfCauchyPrior{};

    bool operator==(const PriorConfig&) const = default;

    bool hierarchical() const noexcept
    {
        return !std::holds_alternative<FixedNoBorrowPrior>(threshold_prior);
    }

    static PriorConfig no_borrowing()
    {
        PriorConfig p;
        p.threshold_prior = FixedNoBorrowPrior{};
        return p;
    }

    void validate() const
    {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw usage_error(std::string("prior parameter '") + name +
                                  "' must be a positive finite number");
        };
        auto finite = [](double v, const char* name) {
            if (!std::isfinite(v))
                throw usage_error(std::string("prior parameter '") + name + "' must be finite");
        };
        positive(a, "a");
        positive(b, "b");
        finite(mu_theta, "mu_theta");
        positive(sigma_theta, "sigma_theta");
        finite(mu_theta_minus, "mu_theta_minus");
        positive(sigma_theta_minus, "sigma_theta_minus");
        positive(a_delta, "a_delta");
        positive(b_delta, "b_delta");
        positive(sigma, "sigma");
        std::visit(
            [&](const auto& tp) {
                using T = std::decay_t<decltype(tp)>;
                if constexpr (std::is_same_v<T, HalfCauchyPrior>) {
                    positive(tp.gamma, "gamma");
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    positive(tp.shape, "ig_shape");
                    positive(tp.scale, "ig_scale");
                } else {
                    finite(tp.mu_x0, "mu_x0");
                    positive(tp.sigma_x0, "sigma_x0");
                }
            },
            threshold_prior);
    }
};

enum class SubModel : std::uint8_t {
    m1,  // common response rate
    m2,  // biomarker subgroups with p+ > p-
};

// Both parameter blocks exist at all times; `model` selects which one
// enters the likelihood.
struct IndicationState {
    SubModel model = SubModel::m1;
    double theta = 0.0;
    double theta_minus = 0.0;
    double delta = 1.0;
    double x = 0.0;

    double p_all() const noexcept { return math::invlogit(theta); }
    double p_minus() const noexcept { return math::invlogit(theta_minus); }
    double p_plus() const noexcept { return math::invlogit(theta_minus + delta); }

    bool operator==(const IndicationState&) const = default;
};

struct ModelState {
    double p_m = 0.5;
    std::vector<IndicationState> indications;
    double mu_x = 0.0;
    double sigma_x = 1.0;

    bool operator==(const ModelState&) const = default;

    void validate() const
    {
        if (!(p_m > 0.0 && p_m < 1.0)) throw contract_error("p_M outside (0, 1)");
        if (!(sigma_x > 0.0) || !std::isfinite(sigma_x))
            throw contract_error("sigma_x must be positive");
        if (!std::isfinite(mu_x)) throw contract_error("mu_x must be finite");
        for (const auto& s : indications) {
            if (!(s.delta > 0.0) || !std::isfinite(s.delta))
                throw contract_error("delta must be positive");
            if (!std::isfinite(s.theta) || !std::isfinite(s.theta_minus) || !std::isfinite(s.x))
                throw contract_error("non-finite indication parameter");
        }
    }
};

namespace detail {

inline double bernoulli_logit_term(double theta, bool y) noexcept
{
    // log invlogit(theta) = -log1pexp(-theta); log(1 - invlogit) = -log1pexp(theta)
    return y ? -math::log1pexp(-theta) : -math::log1pexp(theta);
}

inline void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) throw numerical_error(std::string("non-finite ") + what);
}

}  // namespace detail

/// Bernoulli-logit log-likelihood of the common-rate sub-model.
inline double log_lik_m1(double theta, std::span<const Patient> patients)
{
    detail::require_finite(theta, "theta");
    double ll = 0.0;
    for (const auto& p : patients) ll += detail::bernoulli_logit_term(theta, p.response);
    return ll;
}

/// Log-likelihood of the subgroup sub-model. Patients with biomarker <= x are
/// in the negative subgroup (log-odds theta_minus), the rest in the positive
/// subgroup (log-odds theta_minus + delta).
inline double log_lik_m2(double theta_minus, double delta, double x,
                         std::span<const Patient> patients)
{
    detail::require_finite(theta_minus, "theta_minus");
    detail::require_finite(delta, "delta");
    detail::require_finite(x, "threshold");
    if (!(delta > 0.0)) throw contract_error("delta must be positive");
    const double theta_plus = theta_minus + delta;
    double ll = 0.0;
    for (const auto& p : patients)
        ll += detail::bernoulli_logit_term(p.biomarker <= x ? theta_minus : theta_plus,
                                           p.response);
    return ll;
}

/// Sorted biomarker view of one indication with cumulative responder counts.
///
/// The likelihood depends on the data only through (count, responders) on
/// each side of the threshold, so both sub-model likelihoods evaluate in
/// O(log n) here. The sampler runs on this path.
class IndicationStats {
   public:
    IndicationStats() = default;

    explicit IndicationStats(std::span<const Patient> patients)
    {
        std::vector<Patient> sorted(patients.begin(), patients.end());
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const Patient& l, const Patient& r) { return l.biomarker < r.biomarker; });
        biomarkers_.reserve(sorted.size());
        cum_responders_.assign(sorted.size() + 1, 0);
        for (std::size_t j = 0; j < sorted.size(); ++j) {
            biomarkers_.push_back(sorted[j].biomarker);
            cum_responders_[j + 1] = cum_responders_[j] + (sorted[j].response ? 1 : 0);
        }
    }

    std::size_t size() const noexcept { return biomarkers_.size(); }
    std::size_t responders() const noexcept { return cum_responders_.back(); }
    std::span<const double> sorted_biomarkers() const noexcept { return biomarkers_; }

    // Number of patients with biomarker <= x.
    std::size_t count_at_or_below(double x) const noexcept
    {
        return static_cast<std::size_t>(
            std::upper_bound(biomarkers_.begin(), biomarkers_.end(), x) - biomarkers_.begin());
    }

    std::size_t responders_at_or_below(double x) const noexcept
    {
        return cum_responders_[count_at_or_below(x)];
    }

    double log_lik_m1(double theta) const noexcept
    {
        return binomial_logit(theta, size(), responders());
    }

    double log_lik_m2(double theta_minus, double delta, double x) const noexcept
    {
        const std::size_t n_neg = count_at_or_below(x);
        const std::size_t s_neg = cum_responders_[n_neg];
        return binomial_logit(theta_minus, n_neg, s_neg) +
               binomial_logit(theta_minus + delta, size() - n_neg, responders() - s_neg);
    }

   private:
    static double binomial_logit(double theta, std::size_t n, std::size_t s) noexcept
    {
        if (n == 0) return 0.0;
        const double ns = static_cast<double>(s);
        const double nf = static_cast<double>(n - s);
        return -ns * math::log1pexp(-theta) - nf * math::log1pexp(theta);
    }

    std::vector<double> biomarkers_;
    std::vector<std::size_t> cum_responders_{0};
};

/// Log prior density of a full product-space state.
///
/// Every block of every indication is scored under its prior regardless of
/// the active sub-model. Under the inverse-gamma variant the density is on
/// sigma_x (the variance prior times the Jacobian 2 sigma_x).
inline double log_prior(const ModelState& state, const PriorConfig& config)
{
    state.validate();
    double lp = math::beta_log_pdf(state.p_m, config.a, config.b);
    for (const auto& s : state.indications) {
        lp += s.model == SubModel::m1 ? std::log(state.p_m) : std::log1p(-state.p_m);
        lp += math::normal_log_pdf(s.theta, config.mu_theta, config.sigma_theta);
        lp += math::normal_log_pdf(s.theta_minus, config.mu_theta_minus, config.sigma_theta_minus);
        lp += math::gamma_log_pdf(s.delta, config.a_delta, config.b_delta);
    }

    if (const auto* fixed = std::get_if<FixedNoBorrowPrior>(&config.threshold_prior)) {
        for (const auto& s : state.indications)
            lp += math::normal_log_pdf(s.x, fixed->mu_x0, fixed->sigma_x0);
        return lp;
    }

    for (const auto& s : state.indications)
        lp += math::normal_log_pdf(s.x, state.mu_x, state.sigma_x);
    lp += math::normal_log_pdf(state.mu_x, 0.0, config.sigma);
    if (const auto* hc = std::get_if<HalfCauchyPrior>(&config.threshold_prior)) {
        lp += math::half_cauchy_log_pdf(state.sigma_x, hc->gamma);
    } else {
        const auto& ig = std::get<InverseGammaPrior>(config.threshold_prior);
        lp += math::inverse_gamma_log_pdf(state.sigma_x * state.sigma_x, ig.shape, ig.scale) +
              std::log(2.0 * state.sigma_x);
    }
    return lp;
}

/// All-comers response rate when a fraction cdf(x) of patients falls in the
/// negative subgroup.
template <class Cdf>
double overall_rate(double p_minus, double p_plus, double x, Cdf&& biomarker_cdf)
{
    const double f = biomarker_cdf(x);
    return f * p_minus + (1.0 - f) * p_plus;
}

}  // namespace simba
