#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace simba {

// SplitMix64 finalizer; used only to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of sub-stream `index` under `base`.
///
/// Stable across releases: stream_seed(b, i) = splitmix64(b ^ splitmix64(i + 1)).
/// Replicate r of a simulation uses stream_seed(base_seed, r); a trial then
/// splits its own seed the same way for patient generation and each MCMC fit,
/// so results never depend on scheduling or thread count.
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) noexcept
{
    return splitmix64(base ^ splitmix64(index + 1));
}

class Rng {
   public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform on (0, 1), never returning 0.
    double uniform_open()
    {
        double u = 0.0;
        while (u <= 0.0) u = uniform();
        return u;
    }

    double normal(double mean = 0.0, double sd = 1.0)
    {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

    // shape/rate
    double gamma(double shape, double rate)
    {
        return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
    }

    double beta(double a, double b)
    {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double half_cauchy(double scale)
    {
        return scale * std::tan(0.5 * std::numbers::pi * uniform_open());
    }

    // shape/scale
    double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

    engine_type& engine() noexcept { return engine_; }

   private:
    engine_type engine_;
};

}  // namespace simba
