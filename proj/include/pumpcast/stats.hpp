#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pumpcast/error.hpp"

namespace pumpcast {

// Empirical percentile with linear interpolation between order statistics:
// rank r = p*(n-1), result interpolates the floor/ceil order stats.
inline double percentile_interpolated(std::vector<double> values, double p) {
    if (values.empty()) throw EmptyInput("percentile of empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("percentile must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double rank = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Negative log-likelihood of a Bernoulli outcome under probability p.
inline double logistic_loss(double y, double p) {
    constexpr double eps = 1e-12;
    p = std::clamp(p, eps, 1.0 - eps);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace pumpcast
