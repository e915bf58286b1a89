#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <simba/model.hpp>

namespace simba::test {

// One-sample Kolmogorov-Smirnov statistic of `draws` against `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double> draws, Cdf&& cdf)
{
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t k = 0; k < draws.size(); ++k) {
        const double f = cdf(draws[k]);
        d = std::max({d, std::abs(f - static_cast<double>(k) / n),
                      std::abs(static_cast<double>(k + 1) / n - f)});
    }
    return d;
}

inline Indication make_indication(const std::vector<double>& x, const std::vector<int>& y,
                                  const std::string& label = "a")
{
    Indication ind{label, {}, x.size(), x.size()};
    for (std::size_t j = 0; j < x.size(); ++j) ind.patients.push_back({x[j], y[j] == 1});
    return ind;
}

// The six-patient, single-indication instance used by the oracle tests.
inline const std::vector<double> tiny_x{-1.5, -0.8, -0.2, 0.3, 0.9, 1.6};
inline const std::vector<int> tiny_y{0, 0, 0, 1, 1, 1};

inline TrialData tiny_data()
{
    TrialData d;
    d.indications.push_back(make_indication(tiny_x, tiny_y));
    return d;
}

}  // namespace simba::test
