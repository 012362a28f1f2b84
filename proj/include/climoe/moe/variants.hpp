#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "climoe/data/samples.hpp"
#include "climoe/moe/model.hpp"
#include "climoe/moe/train.hpp"

namespace climoe::moe {

enum class VariantKind { adaptive, no_pretraining, no_specialization, mlp_baseline };

inline constexpr std::string_view variant_name(VariantKind k) {
    switch (k) {
        case VariantKind::adaptive: return "adaptive";
        case VariantKind::no_pretraining: return "no_pretraining";
        case VariantKind::no_specialization: return "no_specialization";
        case VariantKind::mlp_baseline: return "mlp_baseline";
    }
    return "?";
}

inline VariantKind parse_variant(std::string_view s) {
    for (auto k : {VariantKind::adaptive, VariantKind::no_pretraining, VariantKind::no_specialization,
                   VariantKind::mlp_baseline})
        if (variant_name(k) == s) return k;
    throw ConfigError("unknown variant '" + std::string(s) + "'");
}

inline TrainConfig with_epochs(int epochs, bool keep_best_val = false) {
    TrainConfig c;
    c.epochs = epochs;
    c.keep_best_val = keep_best_val;
    return c;
}

// Architecture and schedule shared by all variants of one experiment.
struct VariantConfig {
    std::size_t input_dim = 19 * data::kDefaultWindow;
    std::size_t experts = kDefaultExperts;
    std::vector<std::size_t> expert_hidden = {64, 64};
    std::vector<std::size_t> router_hidden = {64};
    std::vector<std::size_t> baseline_hidden = {64, 64, 64};

    // The last phase of every variant (router, joint, baseline) returns its
    // best-validation snapshot.
    TrainConfig expert_phase = with_epochs(160);
    TrainConfig router_phase = with_epochs(10, true);
    TrainConfig baseline = with_epochs(20, true);
    // Epochs of the uniform expert phase (no_specialization) and of joint
    // training (no_pretraining). Zero matches adaptive's per-expert update
    // budget: expert_phase.epochs * 2 / experts.
    int uniform_epochs = 0;
    int joint_epochs = 0;

    nn::MlpSpec expert_spec() const { return {input_dim, expert_hidden, 1}; }
    nn::MlpSpec router_spec() const { return {input_dim, router_hidden, experts}; }
    nn::MlpSpec baseline_spec() const { return {input_dim, baseline_hidden, 1}; }

    int per_expert_epochs() const {
        return std::max(1, static_cast<int>((static_cast<std::size_t>(expert_phase.epochs) * 2) / experts));
    }
    int resolved_uniform_epochs() const { return uniform_epochs > 0 ? uniform_epochs : per_expert_epochs(); }
    int resolved_joint_epochs() const { return joint_epochs > 0 ? joint_epochs : per_expert_epochs(); }
};

struct TrainedVariant {
    VariantKind kind = VariantKind::adaptive;
    std::optional<ExpertPool> pool;
    std::optional<RouterModel> router;
    std::optional<nn::MlpSpec> baseline_spec;
    std::optional<nn::ParamVector> baseline_params;
    TrainLog log;

    double predict(std::span<const double> input) const {
        if (kind == VariantKind::mlp_baseline) return nn::forward(*baseline_spec, *baseline_params, input)[0];
        return moe::predict(*router, *pool, input);
    }
};

inline TrainedVariant train_variant(VariantKind kind, const data::SampleSet& data, const VariantConfig& cfg,
                                    std::uint64_t seed) {
    TrainedVariant out;
    out.kind = kind;
    auto phase = [&](TrainConfig c, std::uint64_t stream) {
        c.seed = hash_key(seed, stream);
        return c;
    };
    if (kind == VariantKind::mlp_baseline) {
        out.baseline_spec = cfg.baseline_spec();
        out.baseline_params = nn::init_params(*out.baseline_spec, hash_key(seed, 0x31));
        out.log = train_mlp(*out.baseline_spec, *out.baseline_params, data, phase(cfg.baseline, 0x32));
        return out;
    }

    out.pool = ExpertPool::create(cfg.expert_spec(), cfg.experts, hash_key(seed, 0x11));
    out.router = RouterModel::create(cfg.router_spec(), hash_key(seed, 0x12));
    switch (kind) {
        case VariantKind::adaptive:
            out.log = train_experts(*out.pool, data, phase(cfg.expert_phase, 0x21));
            out.log.append(train_router(*out.router, *out.pool, data, phase(cfg.router_phase, 0x22)));
            break;
        case VariantKind::no_specialization: {
            auto c = phase(cfg.expert_phase, 0x21);
            c.lambda_div = 0.0;
            c.epochs = cfg.resolved_uniform_epochs();
            out.log = train_experts_uniform(*out.pool, data, c);
            out.log.append(train_router(*out.router, *out.pool, data, phase(cfg.router_phase, 0x22)));
            break;
        }
        case VariantKind::no_pretraining: {
            auto c = phase(cfg.router_phase, 0x22);
            c.epochs = cfg.resolved_joint_epochs();
            out.log = train_joint(*out.router, *out.pool, data, c);
            break;
        }
        case VariantKind::mlp_baseline:
            break;
    }
    return out;
}

}  // namespace climoe::moe
