#pragma once

// Element-wise sum fusion of two normalized modality vectors, followed by a
// second min-max pass fitted on training fusion outputs.

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "climoe/error.hpp"

namespace climoe::data {

inline std::vector<double> fuse_sum(std::span<const double> primary, std::span<const double> aux) {
    if (primary.size() != aux.size())
        throw ShapeError("fuse: modality lengths differ (" + std::to_string(primary.size()) + " vs " +
                         std::to_string(aux.size()) + ")");
    std::vector<double> out(primary.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (primary[k] < 0.0 || primary[k] > 1.0 || aux[k] < 0.0 || aux[k] > 1.0)
            throw ConfigError("fuse: inputs must be min-max normalized to [0,1]");
        out[k] = primary[k] + aux[k];
    }
    return out;
}

// One scalar range shared by every slot, so the second normalization is a
// single monotone map and never reorders values.
struct FusionScaler {
    double min = 0.0;
    double max = 0.0;

    static FusionScaler fit(std::span<const std::vector<double>> training_sums) {
        FusionScaler s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& v : training_sums)
            for (double x : v) {
                s.min = std::min(s.min, x);
                s.max = std::max(s.max, x);
            }
        if (s.min > s.max) throw ConfigError("fuse: no training outputs to fit the second normalization");
        return s;
    }

    double apply(double x) const {
        if (!(max > min)) return 0.0;
        return std::clamp((x - min) / (max - min), 0.0, 1.0);
    }
};

inline std::vector<double> fuse(std::span<const double> primary, std::span<const double> aux,
                                const FusionScaler& scaler) {
    auto out = fuse_sum(primary, aux);
    for (auto& x : out) x = scaler.apply(x);
    return out;
}

}  // namespace climoe::data
