#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "climoe/data/series.hpp"
#include "climoe/error.hpp"

namespace climoe::data {

struct FeatureRange {
    int feature_id = 0;
    double min = 0.0;
    double max = 0.0;

    bool operator==(const FeatureRange&) const = default;
};

// Per-variable min/max, fitted on training timestamps only.
struct NormStats {
    std::vector<FeatureRange> ranges;  // one per variable, ordered by feature id

    const FeatureRange& range(int feature_id) const {
        for (const auto& r : ranges)
            if (r.feature_id == feature_id) return r;
        throw ConfigError("normalization stats have no feature id " + std::to_string(feature_id));
    }

    bool operator==(const NormStats&) const = default;
};

inline NormStats fit_norm(const FrameSeries& series, std::span<const std::size_t> train_timestamps) {
    if (train_timestamps.empty()) throw ConfigError("fit_norm: no training timestamps");
    NormStats stats;
    for (std::size_t k = 0; k < series.variables.size(); ++k) {
        FeatureRange r{series.variables[k].feature_id, std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()};
        for (auto t : train_timestamps) {
            if (t >= series.timestep_count()) throw ConfigError("fit_norm: timestamp index out of range");
            for (double v : series.frame_at(k, t)) {
                r.min = std::min(r.min, v);
                r.max = std::max(r.max, v);
            }
        }
        stats.ranges.push_back(r);
    }
    return stats;
}

inline double apply_norm(const FeatureRange& r, double value) {
    if (!(r.max > r.min)) return 0.0;
    return std::clamp((value - r.min) / (r.max - r.min), 0.0, 1.0);
}

inline double apply_norm(const NormStats& stats, double value, int feature_id) {
    return apply_norm(stats.range(feature_id), value);
}

// Inverse of apply_norm for in-range values; degenerate features map back to min.
inline double invert_norm(const NormStats& stats, double normalized, int feature_id) {
    const auto& r = stats.range(feature_id);
    return r.min + normalized * (r.max - r.min);
}

inline nlohmann::ordered_json norm_to_json(const NormStats& s) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : s.ranges)
        arr.push_back({{"feature_id", r.feature_id}, {"min", r.min}, {"max", r.max}});
    return {{"variables", std::move(arr)}};
}

inline NormStats norm_from_json(const nlohmann::json& j) {
    NormStats s;
    try {
        for (const auto& v : j.at("variables")) {
            FeatureRange r{v.at("feature_id").get<int>(), v.at("min").get<double>(), v.at("max").get<double>()};
            if (!(r.min <= r.max)) throw FormatError("norm stats: min > max for feature " + std::to_string(r.feature_id));
            s.ranges.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("norm stats: ") + e.what());
    }
    return s;
}

}  // namespace climoe::data
