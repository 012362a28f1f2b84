#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "climoe/error.hpp"
#include "climoe/nn/mlp.hpp"

namespace climoe::nn {

enum class OptimizerKind { sgd, adam };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimState {
    OptimizerSettings settings;
    std::vector<double> first_moment;   // adam only
    std::vector<double> second_moment;  // adam only
    std::uint64_t step = 0;

    OptimState() = default;
    OptimState(const OptimizerSettings& s, std::size_t n) : settings(s) {
        if (!(s.learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
        if (s.kind == OptimizerKind::adam) {
            first_moment.assign(n, 0.0);
            second_moment.assign(n, 0.0);
        }
    }
};

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

// Applies one update in place. On non-finite gradients nothing is modified
// and NumericError is thrown.
inline void optimizer_step(OptimState& state, std::span<double> params,
                           std::span<const double> grads) {
    if (grads.size() != params.size())
        throw ShapeError("optimizer_step: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
    if (!all_finite(grads)) throw NumericError("optimizer_step: non-finite gradient");

    const auto& s = state.settings;
    ++state.step;
    if (s.kind == OptimizerKind::sgd) {
        for (std::size_t k = 0; k < params.size(); ++k) params[k] -= s.learning_rate * grads[k];
        return;
    }
    if (state.first_moment.size() != params.size())
        throw ShapeError("optimizer_step: moment buffers do not match parameter count");
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        double& m = state.first_moment[k];
        double& v = state.second_moment[k];
        m = s.beta1 * m + (1.0 - s.beta1) * g;
        v = s.beta2 * v + (1.0 - s.beta2) * g * g;
        params[k] -= s.learning_rate * (m / c1) / (std::sqrt(v / c2) + s.epsilon);
    }
}

inline void optimizer_step(OptimState& state, ParamVector& params, std::span<const double> grads) {
    optimizer_step(state, std::span<double>(params.values), grads);
}

}  // namespace climoe::nn
