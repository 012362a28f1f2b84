#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "climoe/error.hpp"
#include "climoe/nn/mlp.hpp"
#include "climoe/nn/optimizer.hpp"
#include "climoe/nn/param_io.hpp"

namespace climoe::moe {

inline constexpr std::size_t kDefaultExperts = 16;

// E identically shaped experts. A shared spec is what makes the parameter
// distance between two experts well defined.
struct ExpertPool {
    nn::MlpSpec spec;
    std::vector<nn::ParamVector> params;
    std::vector<bool> frozen;

    std::size_t size() const { return params.size(); }

    static ExpertPool create(const nn::MlpSpec& spec, std::size_t experts, std::uint64_t seed) {
        if (experts < 2) throw ConfigError("expert pool needs at least two experts");
        if (spec.output_dim != 1) throw ConfigError("experts must have a scalar output");
        ExpertPool pool;
        pool.spec = spec;
        for (std::size_t e = 0; e < experts; ++e)
            pool.params.push_back(nn::init_params(spec, hash_key(seed, 0xe0, e)));
        pool.frozen.assign(experts, false);
        return pool;
    }

    void freeze_all() { frozen.assign(params.size(), true); }
    bool all_frozen() const { return std::all_of(frozen.begin(), frozen.end(), [](bool f) { return f; }); }

    std::vector<std::uint64_t> fingerprints() const {
        std::vector<std::uint64_t> out;
        for (const auto& p : params) out.push_back(p.fingerprint());
        return out;
    }
};

struct RouterModel {
    nn::MlpSpec spec;  // input -> hidden -> E logits
    nn::ParamVector params;

    static RouterModel create(const nn::MlpSpec& spec, std::uint64_t seed) {
        return {spec, nn::init_params(spec, hash_key(seed, 0x70)) };
    }
};

// Numerically stable softmax, in place.
inline void softmax(std::span<double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& x : z) {
        x = std::exp(x - m);
        sum += x;
    }
    for (auto& x : z) x /= sum;
}

// Gate weights for one input: softmax of the router logits.
inline std::vector<double> gate_weights(const RouterModel& router, std::span<const double> input) {
    auto w = nn::forward(router.spec, router.params, input);
    softmax(w);
    return w;
}

inline double combine(std::span<const double> weights, std::span<const double> expert_outputs) {
    if (weights.size() != expert_outputs.size())
        throw ShapeError("combine: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(expert_outputs.size()) + " experts");
    double y = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) y += weights[j] * expert_outputs[j];
    return y;
}

inline std::vector<double> expert_outputs(const ExpertPool& pool, std::span<const double> input) {
    std::vector<double> out(pool.size());
    nn::MlpWorkspace ws(pool.spec);
    for (std::size_t j = 0; j < pool.size(); ++j) out[j] = ws.forward(pool.params[j], input)[0];
    return out;
}

// Weighted sum of expert predictions under the router's gate.
inline double predict(const RouterModel& router, const ExpertPool& pool, std::span<const double> input) {
    if (router.spec.output_dim != pool.size())
        throw ShapeError("router emits " + std::to_string(router.spec.output_dim) + " weights for " +
                         std::to_string(pool.size()) + " experts");
    return combine(gate_weights(router, input), expert_outputs(pool, input));
}

inline double param_distance(const nn::ParamVector& a, const nn::ParamVector& b) {
    if (a.size() != b.size()) throw ShapeError("param_distance: vectors differ in length");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a.values[k] - b.values[k];
        s += d * d;
    }
    return std::sqrt(s);
}

// -min(||P_i - P_j||, cap) over the flattened parameter vectors.
inline double diversity_loss(const ExpertPool& pool, std::size_t i, std::size_t j, double cap) {
    if (i == j) throw ConfigError("diversity_loss: expert pair must be distinct");
    if (i >= pool.size() || j >= pool.size()) throw ConfigError("diversity_loss: expert index out of range");
    if (!(cap > 0.0)) throw ConfigError("diversity_loss: cap must be positive");
    return -std::min(param_distance(pool.params[i], pool.params[j]), cap);
}

// Adds scale * d(diversity_loss)/dP_i to grad_i and the mirror term to grad_j.
// The subgradient is zero at or beyond the cap and at zero distance.
inline double add_diversity_gradient(const nn::ParamVector& pi, const nn::ParamVector& pj, double cap,
                                     double scale, std::span<double> grad_i, std::span<double> grad_j) {
    const double d = param_distance(pi, pj);
    if (d >= cap || d == 0.0 || scale == 0.0) return -std::min(d, cap);
    const double f = scale / d;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        const double diff = pi.values[k] - pj.values[k];
        grad_i[k] -= f * diff;
        grad_j[k] += f * diff;
    }
    return -d;
}

// ---- persistence -----------------------------------------------------------

inline std::string expert_file_name(std::size_t e) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "expert_%02zu.bin", e);
    return buf;
}

inline void save_pool(const ExpertPool& pool, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t e = 0; e < pool.size(); ++e)
        nn::save_params(dir / expert_file_name(e), pool.spec, pool.params[e]);
}

// Loads expert_00.bin, expert_01.bin, ... until the first gap. The result is
// fully frozen. Any unreadable file aborts the whole load.
inline ExpertPool load_pool(const std::filesystem::path& dir, const std::optional<nn::MlpSpec>& expected = {}) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir) || !fs::exists(dir / expert_file_name(0)))
        throw FormatError("expert pool not found at " + dir.string());
    ExpertPool pool;
    std::optional<nn::MlpSpec> spec = expected;
    for (std::size_t e = 0; fs::exists(dir / expert_file_name(e)); ++e) {
        auto loaded = nn::load_params(dir / expert_file_name(e), spec);
        if (!spec) spec = loaded.spec;
        pool.params.push_back(std::move(loaded.params));
    }
    if (pool.params.size() < 2) throw FormatError("expert pool at " + dir.string() + " has fewer than two experts");
    pool.spec = *spec;
    pool.freeze_all();
    return pool;
}

}  // namespace climoe::moe
