#pragma once

#include <cmath>
#include <numbers>

namespace simba::math {

inline constexpr double log_two_pi = 1.8378770664093454835606594728112;

// log(1 + e^x) without overflow for large |x|.
inline double log1pexp(double x) noexcept
{
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double invlogit(double x) noexcept
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

inline double normal_cdf(double z) noexcept
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_log_pdf(double x, double mean, double sd) noexcept
{
    const double z = (x - mean) / sd;
    return -0.5 * log_two_pi - std::log(sd) - 0.5 * z * z;
}

// Gamma with shape/rate parameterization.
inline double gamma_log_pdf(double x, double shape, double rate) noexcept
{
    return shape * std::log(rate) - std::lgamma(shape) +
           (shape - 1.0) * std::log(x) - rate * x;
}

inline double beta_log_pdf(double x, double a, double b) noexcept
{
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
           (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

inline double half_cauchy_log_pdf(double x, double scale) noexcept
{
    const double z = x / scale;
    return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(z * z);
}

// Inverse gamma with shape/scale parameterization.
inline double inverse_gamma_log_pdf(double x, double shape, double scale) noexcept
{
    return shape * std::log(scale) - std::lgamma(shape) -
           (shape + 1.0) * std::log(x) - scale / x;
}

}  // namespace simba::math
