#pragma once

// Model bundle directory:
//   pool/expert_{00..}.bin   expert parameters
//   router.bin               gate parameters (after router training)
//   norm_stats.json          normalization fitted on the training hours
//   train_log.jsonl          one JSON object per epoch and phase
//   manifest.json            specs, lambda, tau, seeds, data fingerprint

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "climoe/data/norm.hpp"
#include "climoe/data/samples.hpp"
#include "climoe/data/series.hpp"
#include "climoe/eval/experiment.hpp"
#include "climoe/moe/model.hpp"
#include "climoe/moe/train.hpp"
#include "climoe/nn/param_io.hpp"

namespace climoe::moe {

namespace bundle_detail {

inline nlohmann::json read_json(const std::filesystem::path& p) {
    try {
        return nlohmann::json::parse(nn::read_file(p));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
    nn::write_file(p, j.dump(2) + "\n");
}

}  // namespace bundle_detail

struct ExpertBundleResult {
    ExpertPool pool;
    TrainLog log;
};

// Trains the expert pool on `series` and writes pool/, norm_stats.json,
// train_log.jsonl and manifest.json under `out`.
inline ExpertBundleResult train_experts_bundle(const data::FrameSeries& series, const std::filesystem::path& out,
                                               const eval::ExperimentConfig& cfg, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const auto plan = data::plan_split(series.timestep_count(), cfg.window);
    const auto stats = data::fit_norm(series, plan.train_timestamps());
    const auto cells = data::select_cells(series.grid, cfg.cell_stride);
    const auto samples = data::make_samples(series, stats, cfg.window, cells);

    auto pool = ExpertPool::create(cfg.model.expert_spec(), cfg.model.experts, hash_key(seed, 0x11));
    auto phase = cfg.model.expert_phase;
    phase.seed = hash_key(seed, 0x21);
    auto log = train_experts(pool, samples, phase);

    fs::create_directories(out);
    fs::remove(out / "router.bin");
    save_pool(pool, out / "pool");
    bundle_detail::write_json(out / "norm_stats.json", data::norm_to_json(stats));
    nn::write_file(out / "train_log.jsonl", log.to_jsonl());

    nlohmann::ordered_json m;
    m["format"] = "climoe-bundle";
    m["version"] = 1;
    m["data_fingerprint"] = eval::hex64(series.fingerprint());
    m["window"] = cfg.window;
    m["cell_stride"] = cfg.cell_stride;
    m["experts"] = pool.size();
    m["expert_spec"] = pool.spec.descriptor();
    m["router_spec"] = cfg.model.router_spec().descriptor();
    m["lambda"] = phase.lambda_div;
    m["tau"] = phase.div_cap;
    m["expert_phase"] = eval::train_config_json(phase);
    m["seeds"] = {{"experts", seed}};
    bundle_detail::write_json(out / "manifest.json", m);
    return {std::move(pool), std::move(log)};
}

struct RouterBundleResult {
    RouterModel router;
    TrainLog log;
};

// Loads the frozen pool from `bundle`, trains the router and adds router.bin;
// router lines in train_log.jsonl are replaced and the manifest updated.
inline RouterBundleResult train_router_bundle(const data::FrameSeries& series, const std::filesystem::path& bundle,
                                              TrainConfig phase, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (!fs::exists(bundle / "pool" / expert_file_name(0)))
        throw FormatError("expert pool not found in " + bundle.string() + " (run train-experts first)");
    auto manifest = bundle_detail::read_json(bundle / "manifest.json");
    const auto expert_spec = nn::parse_descriptor(manifest.at("expert_spec").get<std::string>());
    const auto router_spec = nn::parse_descriptor(manifest.at("router_spec").get<std::string>());
    const auto pool = load_pool(bundle / "pool", expert_spec);
    if (manifest.at("data_fingerprint").get<std::string>() != eval::hex64(series.fingerprint()))
        throw ConfigError("dataset does not match the one the experts were trained on");

    const auto stats = data::norm_from_json(bundle_detail::read_json(bundle / "norm_stats.json"));
    const auto window = manifest.at("window").get<std::size_t>();
    const auto cells = data::select_cells(series.grid, manifest.at("cell_stride").get<std::size_t>());
    const auto samples = data::make_samples(series, stats, window, cells);

    auto router = RouterModel::create(router_spec, hash_key(seed, 0x12));
    phase.seed = hash_key(seed, 0x22);
    auto log = train_router(router, pool, samples, phase);
    nn::save_params(bundle / "router.bin", router.spec, router.params);

    TrainLog merged;
    if (fs::exists(bundle / "train_log.jsonl")) {
        std::istringstream in(nn::read_file(bundle / "train_log.jsonl"));
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            auto e = nlohmann::ordered_json::parse(line);
            if (e.value("phase", "") != "router") merged.add(std::move(e));
        }
    }
    merged.append(log);
    nn::write_file(bundle / "train_log.jsonl", merged.to_jsonl());

    nlohmann::ordered_json m = nlohmann::ordered_json::parse(nn::read_file(bundle / "manifest.json"));
    m["router_phase"] = eval::train_config_json(phase);
    m["seeds"]["router"] = seed;
    bundle_detail::write_json(bundle / "manifest.json", m);
    return {std::move(router), std::move(log)};
}

}  // namespace climoe::moe
