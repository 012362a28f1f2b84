#pragma once

#include <cmath>
#include <span>
#include <string>

#include "climoe/error.hpp"

namespace climoe::eval {

struct Metrics {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
};

inline Metrics metrics(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size())
        throw ShapeError("metrics: " + std::to_string(y.size()) + " targets vs " + std::to_string(y_hat.size()) +
                         " predictions");
    if (y.empty()) throw ConfigError("metrics: no samples");
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(y.size());
    Metrics m;
    m.mae = abs_sum / n;
    m.mse = sq_sum / n;
    m.rmse = std::sqrt(m.mse);
    return m;
}

// Mean and sample (n-1) standard deviation; zero spread for a single value.
struct Spread {
    double mean = 0.0;
    double std = 0.0;
};

inline Spread mean_std(std::span<const double> xs) {
    if (xs.empty()) return {};
    double s = 0.0;
    for (double x : xs) s += x;
    const double mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    return {mean, std::sqrt(v / static_cast<double>(xs.size() - 1))};
}

}  // namespace climoe::eval
