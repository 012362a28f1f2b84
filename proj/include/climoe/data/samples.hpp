#pragma once

// Windowed supervised samples. A sample anchored at hour t holds the
// normalized values of all 19 features over hours t-N+1..t, laid out
// feature-major and time-minor; its target is the raw precipitation rate at
// t+1. Anchors are split chronologically 7:1:2.

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "climoe/data/norm.hpp"
#include "climoe/data/series.hpp"
#include "climoe/data/variables.hpp"
#include "climoe/error.hpp"

namespace climoe::data {

inline constexpr std::size_t kDefaultWindow = 6;

enum class Partition : std::uint8_t { train, val, test };

inline const char* partition_name(Partition p) {
    switch (p) {
        case Partition::train: return "train";
        case Partition::val: return "val";
        case Partition::test: return "test";
    }
    return "?";
}

struct SplitPlan {
    std::size_t window = kDefaultWindow;
    std::size_t first_anchor = 0;  // hour index of the earliest anchor (window - 1)
    std::size_t anchor_count = 0;
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;

    Partition partition_of(std::size_t anchor_ordinal) const {
        if (anchor_ordinal < train) return Partition::train;
        if (anchor_ordinal < train + val) return Partition::val;
        return Partition::test;
    }

    // Hours read by training inputs; the normalization fit uses exactly these.
    std::vector<std::size_t> train_timestamps() const {
        std::vector<std::size_t> ts(first_anchor + train);
        std::iota(ts.begin(), ts.end(), std::size_t{0});
        return ts;
    }
};

inline SplitPlan plan_split(std::size_t timesteps, std::size_t window) {
    if (window < 1) throw ConfigError("window must be at least 1");
    if (timesteps < window + 1)
        throw ConfigError("series too short: " + std::to_string(timesteps) + " timestamps for window " +
                          std::to_string(window));
    SplitPlan p;
    p.window = window;
    p.first_anchor = window - 1;
    p.anchor_count = timesteps - window;
    p.train = p.anchor_count * 7 / 10;
    p.val = p.anchor_count / 10;
    p.test = p.anchor_count - p.train - p.val;
    if (p.train == 0) throw ConfigError("series too short: no training anchors");
    return p;
}

struct SampleProvenance {
    std::uint32_t cell = 0;
    std::uint32_t anchor = 0;  // hour index of the last input hour

    bool operator==(const SampleProvenance&) const = default;
};

struct SampleSet {
    std::size_t window = kDefaultWindow;
    std::size_t input_dim = 0;
    SplitPlan plan;
    std::vector<double> inputs;  // size() x input_dim
    std::vector<double> targets;
    std::vector<Partition> partition;
    std::vector<SampleProvenance> provenance;

    std::size_t size() const { return targets.size(); }

    std::span<const double> input(std::size_t i) const { return {inputs.data() + i * input_dim, input_dim}; }

    std::vector<std::size_t> indices(Partition p) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < partition.size(); ++i)
            if (partition[i] == p) out.push_back(i);
        return out;
    }
};

// Input slot of (feature, lag) where lag 0 is the oldest hour of the window.
inline std::size_t input_slot(int feature_id, std::size_t lag, std::size_t window) {
    return static_cast<std::size_t>(feature_id - 1) * window + lag;
}

// Every stride-th cell in both directions, centred in its stride block.
inline std::vector<std::size_t> select_cells(const GridSpec& grid, std::size_t stride) {
    if (stride == 0) throw ConfigError("cell stride must be positive");
    std::vector<std::size_t> cells;
    const std::size_t off = stride / 2;
    for (std::size_t r = off; r < grid.rows; r += stride)
        for (std::size_t c = off; c < grid.cols; c += stride) cells.push_back(grid.cell_index(r, c));
    return cells;
}

// Builds one sample per (anchor, cell). An empty `cells` means every cell.
inline SampleSet make_samples(const FrameSeries& series, const NormStats& stats, std::size_t window,
                              std::span<const std::size_t> cells = {}) {
    const auto plan = plan_split(series.timestep_count(), window);
    std::vector<std::size_t> all;
    if (cells.empty()) {
        all.resize(series.frame_size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        cells = all;
    }
    for (auto c : cells)
        if (c >= series.frame_size()) throw ConfigError("cell index " + std::to_string(c) + " outside grid");

    SampleSet s;
    s.window = window;
    s.input_dim = static_cast<std::size_t>(kFeatureCount) * window;
    s.plan = plan;
    const std::size_t n = plan.anchor_count * cells.size();
    s.inputs.resize(n * s.input_dim);
    s.targets.resize(n);
    s.partition.resize(n);
    s.provenance.resize(n);

    std::vector<FeatureRange> ranges;
    for (int id = 1; id <= kFeatureCount; ++id) ranges.push_back(stats.range(id));
    const auto precip = series.variable_index(kPrecipRate);

    std::size_t i = 0;
    for (std::size_t a = 0; a < plan.anchor_count; ++a) {
        const std::size_t t = plan.first_anchor + a;
        const auto part = plan.partition_of(a);
        for (auto cell : cells) {
            double* x = s.inputs.data() + i * s.input_dim;
            for (int id = 1; id <= kFeatureCount; ++id) {
                const auto k = series.variable_index(id);
                for (std::size_t lag = 0; lag < window; ++lag) {
                    const double v = series.frame_at(k, t + 1 + lag - window)[cell];
                    x[input_slot(id, lag, window)] = apply_norm(ranges[static_cast<std::size_t>(id - 1)], v);
                }
            }
            s.targets[i] = series.frame_at(precip, t + 1)[cell];
            s.partition[i] = part;
            s.provenance[i] = {static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(t)};
            ++i;
        }
    }
    return s;
}

inline std::vector<bool> group_mask(FeatureGroup group, std::size_t window = kDefaultWindow) {
    std::vector<bool> mask(static_cast<std::size_t>(kFeatureCount) * window, false);
    for (int id : group_members(group))
        for (std::size_t lag = 0; lag < window; ++lag) mask[input_slot(id, lag, window)] = true;
    return mask;
}

inline std::vector<bool> group_mask(std::string_view group, std::size_t window = kDefaultWindow) {
    auto g = parse_group(group);
    if (!g) throw ConfigError("unknown feature group '" + std::string(group) + "'");
    return group_mask(*g, window);
}

}  // namespace climoe::data
