#pragma once

// Multi-seed experiment harness: one SampleSet per dataset, every
// (variant, seed) pair trained and scored on the test partition, and a
// report laid out as model rows x MAE/MSE/RMSE columns.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "climoe/data/norm.hpp"
#include "climoe/data/samples.hpp"
#include "climoe/data/series.hpp"
#include "climoe/eval/metrics.hpp"
#include "climoe/moe/variants.hpp"

namespace climoe::eval {

struct ExperimentConfig {
    std::size_t window = data::kDefaultWindow;
    // Samples are drawn from every cell_stride-th cell in each direction.
    std::size_t cell_stride = 10;
    moe::VariantConfig model;
};

struct RunResult {
    moe::VariantKind variant = moe::VariantKind::adaptive;
    std::uint64_t seed = 0;
    Metrics metrics;
    std::size_t n_test = 0;
    double runtime_seconds = 0.0;  // wall clock, not serialized
};

struct Aggregate {
    moe::VariantKind variant = moe::VariantKind::adaptive;
    std::size_t runs = 0;
    Spread mae, mse, rmse;
};

struct MetricsReport {
    std::uint64_t dataset_fingerprint = 0;
    nlohmann::ordered_json config;
    std::vector<std::uint64_t> seeds;
    std::vector<RunResult> runs;
    std::vector<Aggregate> aggregates;

    const Aggregate& aggregate(moe::VariantKind k) const {
        for (const auto& a : aggregates)
            if (a.variant == k) return a;
        throw ConfigError("report has no variant " + std::string(moe::variant_name(k)));
    }
};

inline nlohmann::ordered_json train_config_json(const moe::TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lambda", c.lambda_div},
            {"tau", c.div_cap},
            {"optimizer", c.optimizer.kind == nn::OptimizerKind::adam ? "adam" : "sgd"},
            {"learning_rate", c.optimizer.learning_rate},
            {"keep_best_val", c.keep_best_val}};
}

inline nlohmann::ordered_json experiment_config_json(const ExperimentConfig& c) {
    const auto& m = c.model;
    return {{"window", c.window},
            {"cell_stride", c.cell_stride},
            {"experts", m.experts},
            {"expert_spec", m.expert_spec().descriptor()},
            {"router_spec", m.router_spec().descriptor()},
            {"baseline_spec", m.baseline_spec().descriptor()},
            {"expert_phase", train_config_json(m.expert_phase)},
            {"router_phase", train_config_json(m.router_phase)},
            {"baseline", train_config_json(m.baseline)},
            {"uniform_epochs", m.resolved_uniform_epochs()},
            {"joint_epochs", m.resolved_joint_epochs()}};
}

// Builds the experiment's sample set: stats fitted on training hours only.
inline data::SampleSet experiment_samples(const data::FrameSeries& series, const ExperimentConfig& cfg) {
    const auto plan = data::plan_split(series.timestep_count(), cfg.window);
    const auto train_ts = plan.train_timestamps();
    const auto stats = data::fit_norm(series, train_ts);
    const auto cells = data::select_cells(series.grid, cfg.cell_stride);
    return data::make_samples(series, stats, cfg.window, cells);
}

struct Evaluation {
    Metrics metrics;
    std::vector<std::size_t> evaluated;  // sample indices scored
};

inline Evaluation evaluate(const moe::TrainedVariant& model, const data::SampleSet& samples) {
    Evaluation ev;
    ev.evaluated = samples.indices(data::Partition::test);
    std::vector<double> y, y_hat;
    y.reserve(ev.evaluated.size());
    y_hat.reserve(ev.evaluated.size());
    for (auto i : ev.evaluated) {
        y.push_back(samples.targets[i]);
        y_hat.push_back(model.predict(samples.input(i)));
    }
    ev.metrics = metrics(y, y_hat);
    return ev;
}

inline std::vector<Aggregate> aggregate_runs(const std::vector<RunResult>& runs,
                                             const std::vector<moe::VariantKind>& variants) {
    std::vector<Aggregate> out;
    for (auto k : variants) {
        std::vector<double> mae, mse, rmse;
        for (const auto& r : runs)
            if (r.variant == k) {
                mae.push_back(r.metrics.mae);
                mse.push_back(r.metrics.mse);
                rmse.push_back(r.metrics.rmse);
            }
        out.push_back({k, mae.size(), mean_std(mae), mean_std(mse), mean_std(rmse)});
    }
    return out;
}

using ProgressFn = std::function<void(const RunResult&)>;

inline MetricsReport run_experiment(const data::FrameSeries& series, const std::vector<moe::VariantKind>& variants,
                                    const std::vector<std::uint64_t>& seeds, const ExperimentConfig& cfg,
                                    const ProgressFn& progress = {}) {
    if (seeds.empty()) throw ConfigError("run_experiment: at least one seed required");
    if (variants.empty()) throw ConfigError("run_experiment: at least one variant required");
    const auto samples = experiment_samples(series, cfg);

    MetricsReport report;
    report.dataset_fingerprint = series.fingerprint();
    report.config = experiment_config_json(cfg);
    report.seeds = seeds;
    for (auto k : variants) {
        for (auto seed : seeds) {
            const auto t0 = std::chrono::steady_clock::now();
            RunResult r;
            r.variant = k;
            r.seed = seed;
            try {
                const auto model = moe::train_variant(k, samples, cfg.model, seed);
                const auto ev = evaluate(model, samples);
                r.metrics = ev.metrics;
                r.n_test = ev.evaluated.size();
            } catch (const NumericError& e) {
                throw NumericError(std::string(moe::variant_name(k)) + " seed " + std::to_string(seed) + ": " + e.what());
            }
            r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (progress) progress(r);
            report.runs.push_back(r);
        }
    }
    report.aggregates = aggregate_runs(report.runs, variants);
    return report;
}

inline MetricsReport run_experiment(const std::filesystem::path& data_dir, const std::vector<moe::VariantKind>& variants,
                                    const std::vector<std::uint64_t>& seeds, const ExperimentConfig& cfg,
                                    const ProgressFn& progress = {}) {
    return run_experiment(data::load_series(data_dir), variants, seeds, cfg, progress);
}

// ---- report serialization -------------------------------------------------

inline std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["dataset_fingerprint"] = hex64(r.dataset_fingerprint);
    j["config"] = r.config;
    j["seeds"] = r.seeds;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& run : r.runs)
        runs.push_back({{"variant", moe::variant_name(run.variant)},
                        {"seed", run.seed},
                        {"mae", run.metrics.mae},
                        {"mse", run.metrics.mse},
                        {"rmse", run.metrics.rmse},
                        {"n_test", run.n_test}});
    j["runs"] = std::move(runs);
    auto aggs = nlohmann::ordered_json::array();
    for (const auto& a : r.aggregates)
        aggs.push_back({{"variant", moe::variant_name(a.variant)},
                        {"runs", a.runs},
                        {"mae", {{"mean", a.mae.mean}, {"std", a.mae.std}}},
                        {"mse", {{"mean", a.mse.mean}, {"std", a.mse.std}}},
                        {"rmse", {{"mean", a.rmse.mean}, {"std", a.rmse.std}}}});
    j["aggregates"] = std::move(aggs);
    return j;
}

inline MetricsReport report_from_json(const nlohmann::ordered_json& j) {
    MetricsReport r;
    try {
        r.dataset_fingerprint = std::stoull(j.at("dataset_fingerprint").get<std::string>(), nullptr, 16);
        r.config = j.at("config");
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        for (const auto& run : j.at("runs")) {
            RunResult x;
            x.variant = moe::parse_variant(run.at("variant").get<std::string>());
            x.seed = run.at("seed").get<std::uint64_t>();
            x.metrics = {run.at("mae").get<double>(), run.at("mse").get<double>(), run.at("rmse").get<double>()};
            x.n_test = run.at("n_test").get<std::size_t>();
            r.runs.push_back(x);
        }
        auto spread = [](const nlohmann::ordered_json& s) { return Spread{s.at("mean").get<double>(), s.at("std").get<double>()}; };
        for (const auto& a : j.at("aggregates")) {
            r.aggregates.push_back({moe::parse_variant(a.at("variant").get<std::string>()), a.at("runs").get<std::size_t>(),
                                    spread(a.at("mae")), spread(a.at("mse")), spread(a.at("rmse"))});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
    return r;
}

// "0.212 (± 0.005)"
inline std::string format_cell(const Spread& s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f (\xC2\xB1 %.3f)", s.mean, s.std);
    return buf;
}

inline std::string render_table(const MetricsReport& r) {
    std::ostringstream out;
    auto row = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
        // the plus-minus sign is two bytes but one column; pad by display width
        auto pad = [](const std::string& s, std::size_t w) {
            std::size_t cols = 0;
            for (unsigned char ch : s)
                if ((ch & 0xC0) != 0x80) ++cols;
            return s + std::string(cols < w ? w - cols : 1, ' ');
        };
        out << pad(a, 20) << pad(b, 18) << pad(c, 18) << d << "\n";
    };
    row("Model", "MAE", "MSE", "RMSE");
    for (const auto& a : r.aggregates)
        row(std::string(moe::variant_name(a.variant)), format_cell(a.mae), format_cell(a.mse), format_cell(a.rmse));
    return out.str();
}

}  // namespace climoe::eval
