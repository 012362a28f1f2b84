// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Tolerances and thresholds are fixed here; nothing is read from the environment.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "climoe/eval/experiment.hpp"
#include "climoe/hash.hpp"
#include "climoe/moe/bundle.hpp"
#include "climoe/service/data_service.hpp"
#include "climoe/synth/storm.hpp"
#include "cli_runner.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "metric_oracle.hpp"

using namespace climoe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::uint64_t tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    Fnv1a h;
    for (const auto& f : files) {
        h.update(fs::relative(f, root).string());
        h.update(nn::read_file(f));
    }
    return h.digest();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// ---- 1 -------------------------------------------------------------------------

Outcome gradients() {
    const auto t0 = Clock::now();
    SplitMix64 rng(0x51);
    int mlp_ok = 0;
    for (int trial = 0; trial < 50; ++trial) {
        nn::MlpSpec spec;
        spec.input_dim = 1 + rng.below(8);
        for (std::size_t d = 0, depth = 1 + rng.below(3); d < depth; ++d) spec.hidden_dims.push_back(1 + rng.below(8));
        spec.output_dim = 1 + rng.below(8);
        auto p = nn::init_params(spec, rng.next());
        for (auto& v : p.values) v += rng.uniform(-0.1, 0.1);
        std::vector<double> x(spec.input_dim), u(spec.output_dim);
        for (auto& v : x) v = rng.uniform(-1, 1);
        for (auto& v : u) v = rng.uniform(-1, 1);
        const auto g = nn::backward(spec, p, x, u);
        auto proj = [&](const nn::ParamVector& q, std::span<const double> xi) {
            const auto y = nn::forward(spec, q, xi);
            double s = 0;
            for (std::size_t k = 0; k < y.size(); ++k) s += y[k] * u[k];
            return s;
        };
        const auto np = gradcheck::numeric_gradient(
            [&](std::span<const double> th) { return proj({{th.begin(), th.end()}, spec.hash()}, x); }, p.values);
        const auto ni = gradcheck::numeric_gradient([&](std::span<const double> xi) { return proj(p, xi); }, x);
        if (gradcheck::compare_gradients(g.params, np).empty() && gradcheck::compare_gradients(g.input, ni).empty())
            ++mlp_ok;
    }

    int router_ok = 0;
    const int router_trials = 20;
    for (int trial = 0; trial < router_trials; ++trial) {
        auto pool = moe::ExpertPool::create({4, {5}, 1}, 2, rng.next());
        auto router = moe::RouterModel::create({4, {6}, 2}, rng.next());
        std::vector<double> x(4);
        for (auto& v : x) v = rng.uniform(0, 1);
        const double y = rng.uniform(-2, 2);
        const auto g = moe::moe_sample_gradients(router, pool, x, y);
        const auto n = gradcheck::numeric_gradient(
            [&](std::span<const double> th) {
                moe::RouterModel r{router.spec, {{th.begin(), th.end()}, router.spec.hash()}};
                const double e = moe::predict(r, pool, x) - y;
                return e * e;
            },
            router.params.values);
        if (gradcheck::compare_gradients(g.router, n).empty()) ++router_ok;
    }
    const double t = seconds_since(t0);
    return {mlp_ok == 50 && router_ok == router_trials && t < 10.0,
            fmt("mlp %d/50, router-through-softmax %d/%d at rel 1e-4, %.2fs (< 10s)", mlp_ok, router_ok, router_trials, t)};
}

// ---- 2 -------------------------------------------------------------------------

Outcome metric_oracle() {
    SplitMix64 rng(0x52);
    double worst = 0, worst_sq = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(500);
        std::vector<double> y(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(-10, 10);
            h[i] = rng.uniform(-10, 10);
        }
        const auto a = eval::metrics(y, h);
        const auto b = oracle::metrics(y, h);
        worst = std::max({worst, std::abs(a.mae - b.mae), std::abs(a.mse - b.mse), std::abs(a.rmse - b.rmse)});
        worst_sq = std::max(worst_sq, std::abs(a.rmse * a.rmse - a.mse));
    }
    return {worst <= 1e-12 && worst_sq <= 1e-9,
            fmt("1000 vectors, max |impl - oracle| = %.2e (<= 1e-12), max |rmse^2 - mse| = %.2e (<= 1e-9)", worst, worst_sq)};
}

// ---- 3 -------------------------------------------------------------------------

Outcome frozen_experts(const fs::path& data, const fs::path& bundle) {
    auto r = fixtures::run_cli("train-experts --data " + q(data) + " --out " + q(bundle) + " --seed 1");
    if (r.status != 0) return {false, "train-experts failed: " + r.output};
    std::vector<std::uint64_t> before, after;
    for (std::size_t e = 0; e < 16; ++e) before.push_back(fnv1a(nn::read_file(bundle / "pool" / moe::expert_file_name(e))));
    r = fixtures::run_cli("train-router --data " + q(data) + " --out " + q(bundle) + " --seed 1 --epochs 5");
    if (r.status != 0) return {false, "train-router failed: " + r.output};
    for (std::size_t e = 0; e < 16; ++e) after.push_back(fnv1a(nn::read_file(bundle / "pool" / moe::expert_file_name(e))));
    int same = 0;
    for (std::size_t e = 0; e < 16; ++e) same += before[e] == after[e];
    const bool extra = fs::exists(bundle / "pool" / moe::expert_file_name(16));
    return {same == 16 && !extra && fs::exists(bundle / "router.bin"),
            fmt("%d/16 expert files hash-identical after 5 router epochs", same)};
}

// ---- 4 -------------------------------------------------------------------------

Outcome simplex(const fs::path& bundle) {
    const auto manifest = nlohmann::json::parse(nn::read_file(bundle / "manifest.json"));
    const auto spec = nn::parse_descriptor(manifest["router_spec"].get<std::string>());
    const auto loaded = nn::load_params(bundle / "router.bin", spec);
    const moe::RouterModel router{loaded.spec, loaded.params};
    SplitMix64 rng(0x54);
    double worst_sum = 0;
    bool in_range = true;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> x(spec.input_dim);
        const double scale = k < 500 ? 1.0 : 100.0;
        for (auto& v : x) v = rng.uniform(k < 500 ? 0.0 : -scale, scale);
        const auto w = moe::gate_weights(router, x);
        double s = 0;
        for (double v : w) {
            in_range = in_range && v >= 0.0 && v <= 1.0;
            s += v;
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
    return {in_range && worst_sum <= 1e-6 && spec.output_dim == 16,
            fmt("1000 inputs through the trained 16-way gate, weights in [0,1]: %s, max |sum - 1| = %.2e (<= 1e-6)",
                in_range ? "yes" : "no", worst_sum)};
}

// ---- 5 -------------------------------------------------------------------------

double mean_pairwise(const moe::ExpertPool& p) {
    double s = 0;
    int n = 0;
    for (std::size_t a = 0; a < p.size(); ++a)
        for (std::size_t b = a + 1; b < p.size(); ++b, ++n) s += moe::param_distance(p.params[a], p.params[b]);
    return s / n;
}

Outcome diversity(const data::SampleSet& samples) {
    const auto t0 = Clock::now();
    const moe::VariantConfig vc;
    const auto init = moe::ExpertPool::create(vc.expert_spec(), vc.experts, hash_key(1, 0x11));
    auto run = [&](double lambda) {
        auto pool = init;
        auto cfg = vc.expert_phase;
        cfg.seed = hash_key(1, 0x21);
        cfg.lambda_div = lambda;
        moe::train_experts(pool, samples, cfg);
        return mean_pairwise(pool);
    };
    const double with = run(0.01), without = run(0.0);
    const double t = seconds_since(t0);
    return {with > without && t < 180.0,
            fmt("mean pairwise L2 %.4f (lambda 0.01) vs %.4f (lambda 0), %d epochs, %.1fs (< 180s)", with, without,
                vc.expert_phase.epochs, t)};
}

// ---- 6 -------------------------------------------------------------------------

Outcome ordering(const data::FrameSeries& series) {
    const auto t0 = Clock::now();
    using K = moe::VariantKind;
    const std::vector<K> vs{K::adaptive, K::no_pretraining, K::no_specialization, K::mlp_baseline};
    const auto report = eval::run_experiment(series, vs, {1, 2, 3, 4, 5}, eval::ExperimentConfig{}, [](const eval::RunResult& r) {
        std::fprintf(stderr, "  %-18s seed %llu  mse %.5f  (%.1fs)\n", std::string(moe::variant_name(r.variant)).c_str(),
                     static_cast<unsigned long long>(r.seed), r.metrics.mse, r.runtime_seconds);
    });
    const double t = seconds_since(t0);
    std::cerr << eval::render_table(report);
    const double a = report.aggregate(K::adaptive).mse.mean, np = report.aggregate(K::no_pretraining).mse.mean;
    const double ns = report.aggregate(K::no_specialization).mse.mean, m = report.aggregate(K::mlp_baseline).mse.mean;
    const bool ok = a < np && np < m && a <= 0.9 * np && a < ns && t < 600.0;
    return {ok, fmt("mean test MSE adaptive %.5f, no_pretraining %.5f, mlp_baseline %.5f, no_specialization %.5f; "
                    "a<np:%d np<mlp:%d a<=0.9np:%d a<ns:%d; %.0fs (< 600s)",
                    a, np, m, ns, a < np, np < m, a <= 0.9 * np, a < ns, t)};
}

// ---- 7 -------------------------------------------------------------------------

Outcome split(const data::FrameSeries& series) {
    const auto plan = data::plan_split(series.timestep_count(), 6);
    bool ok = series.timestep_count() == 216 && plan.anchor_count == 210 && plan.train == 147 && plan.val == 21 &&
              plan.test == 42;

    // Per-cell partition counts and chronology on a cell subset.
    const auto stats = data::fit_norm(series, plan.train_timestamps());
    const std::vector<std::size_t> cells{0, 4321, 9999};
    const auto samples = data::make_samples(series, stats, 6, cells);
    for (auto c : cells) {
        std::size_t n[3] = {0, 0, 0};
        std::uint32_t last_train = 0, first_val = 1u << 30, last_val = 0, first_test = 1u << 30;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples.provenance[i].cell != c) continue;
            const auto a = samples.provenance[i].anchor;
            switch (samples.partition[i]) {
                case data::Partition::train: ++n[0]; last_train = std::max(last_train, a); break;
                case data::Partition::val: ++n[1]; first_val = std::min(first_val, a); last_val = std::max(last_val, a); break;
                case data::Partition::test: ++n[2]; first_test = std::min(first_test, a); break;
            }
        }
        ok = ok && n[0] == 147 && n[1] == 21 && n[2] == 42 && last_train < first_val && last_val < first_test;
    }

    // Leakage: stats match an independent fit over the training-input hours only,
    // and ignore a test-period outlier.
    const std::size_t train_hours = plan.first_anchor + plan.train;
    bool match = true;
    for (int id = 1; id <= 19; ++id) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t t = 0; t < train_hours; ++t)
            for (double v : series.frame(id, t)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        match = match && stats.range(id).min == lo && stats.range(id).max == hi;
    }
    auto poisoned = series;
    poisoned.frame(data::kTemperature2m, 215)[17] = 1e6;
    const bool stored_unchanged = data::fit_norm(poisoned, plan.train_timestamps()) == stats;
    std::vector<std::size_t> all(216);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const bool full_changes = data::fit_norm(poisoned, all).range(data::kTemperature2m).max == 1e6;
    ok = ok && match && stored_unchanged && full_changes;
    return {ok, fmt("T=%zu, anchors %zu split %zu/%zu/%zu, per-cell counts and chronology checked, leakage test %s",
                    series.timestep_count(), plan.anchor_count, plan.train, plan.val, plan.test,
                    match && stored_unchanged && full_changes ? "passed" : "FAILED")};
}

// ---- 8 -------------------------------------------------------------------------

Outcome determinism(const fs::path& root, const fs::path& data, const fs::path& bundle) {
    std::vector<std::string> notes;
    bool ok = true;
    const auto data2 = root / "ref_again";
    auto r = fixtures::run_cli("gen --out " + q(data2) + " --seed 42");
    ok = ok && r.status == 0;
    const bool same_data = tree_digest(data) == tree_digest(data2);
    notes.push_back(std::string("dataset ") + (same_data ? "identical" : "DIFFERS"));

    const auto bundle2 = root / "bundle_again";
    r = fixtures::run_cli("train-experts --data " + q(data) + " --out " + q(bundle2) + " --seed 1");
    ok = ok && r.status == 0;
    r = fixtures::run_cli("train-router --data " + q(data) + " --out " + q(bundle2) + " --seed 1 --epochs 5");
    ok = ok && r.status == 0;
    const bool same_bundle = tree_digest(bundle) == tree_digest(bundle2);
    notes.push_back(std::string("bundle ") + (same_bundle ? "identical" : "DIFFERS"));

    const std::string eval_args = " --seeds 1,2 --cell-stride 25 --expert-epochs 16 --router-epochs 2 --baseline-epochs 2";
    r = fixtures::run_cli("eval --data " + q(data) + " --out " + q(root / "report_a.json") + eval_args);
    ok = ok && r.status == 0;
    r = fixtures::run_cli("eval --data " + q(data) + " --out " + q(root / "report_b.json") + eval_args);
    ok = ok && r.status == 0;
    const bool same_report = nn::read_file(root / "report_a.json") == nn::read_file(root / "report_b.json");
    notes.push_back(std::string("report ") + (same_report ? "identical" : "DIFFERS"));

    std::string d;
    for (const auto& n : notes) d += (d.empty() ? "" : ", ") + n;
    return {ok && same_data && same_bundle && same_report, "gen/train-experts/train-router/eval re-runs: " + d};
}

// ---- 9 -------------------------------------------------------------------------

Outcome service_contract(const fs::path& data) {
    using nlohmann::json;
    const service::DataService svc(data::load_series(data));
    httplib::Server server;
    service::mount(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client cli("127.0.0.1", port);
    std::vector<std::string> bad;
    auto need = [&](bool cond, const std::string& what) {
        if (!cond) bad.push_back(what);
    };
    auto is_json = [](const httplib::Result& r) {
        return r && r->get_header_value("Content-Type").find("application/json") != std::string::npos;
    };

    auto meta = cli.Get("/api/meta");
    need(meta && meta->status == 200 && is_json(meta), "meta status");
    std::size_t frame_len = 0;
    if (meta && meta->status == 200) {
        const auto j = json::parse(meta->body);
        need(j["timestamps"].size() == 216, "216 timestamps");
        need(j["grid"]["rows"] == 100 && j["grid"]["cols"] == 100, "grid 100x100");
        need(j["grid"]["lat_min"] == 24.5 && j["grid"]["lat_max"] == 31.0 && j["grid"]["lon_min"] == -87.0 &&
                 j["grid"]["lon_max"] == -80.0,
             "geographic bounds");
        need(j["variables"].size() == 19, "19 variables");
        for (const auto& v : j["variables"])
            for (auto k : {"feature_id", "name", "unit", "group", "description", "min", "max"})
                need(v.contains(k), std::string("variable field ") + k);
    }
    auto frame = cli.Get("/api/frame?var=1&t=2022-09-29%2003:00");
    need(frame && frame->status == 200 && is_json(frame), "frame status");
    if (frame && frame->status == 200) {
        const auto j = json::parse(frame->body);
        for (auto k : {"feature_id", "timestamp", "min", "max", "values"}) need(j.contains(k), std::string("frame field ") + k);
        frame_len = j["values"].size();
        need(frame_len == 10000, "10000 values");
        need(j["timestamp"] == "2022-09-29 03:00", "frame timestamp");
        const auto vals = j["values"].get<std::vector<double>>();
        const auto stored = svc.series().frame(1, 147);
        need(std::equal(vals.begin(), vals.end(), stored.begin(), stored.end()), "values equal stored frame");
        need(j["min"].get<double>() == *std::min_element(vals.begin(), vals.end()) &&
                 j["max"].get<double>() == *std::max_element(vals.begin(), vals.end()),
             "frame min/max");
    }
    auto range = cli.Get("/api/range?var=6");
    need(range && range->status == 200 && is_json(range), "range status");
    if (range && range->status == 200) {
        const auto j = json::parse(range->body);
        need(j.contains("min") && j.contains("max") && j["min"].get<double>() <= j["max"].get<double>(), "range fields");
    }
    auto unknown = cli.Get("/api/frame?var=99&t=2022-09-29%2003:00");
    need(unknown && unknown->status == 404 && is_json(unknown), "unknown variable 404");
    if (unknown && unknown->status == 404) {
        const auto j = json::parse(unknown->body);
        need(j.contains("error") && j["detail"].get<std::string>().find("99") != std::string::npos, "404 error body");
    }
    server.stop();
    th.join();
    std::string d;
    for (const auto& b : bad) d += (d.empty() ? "" : ", ") + b;
    return {bad.empty(), fmt("/api/meta, /api/frame (%zu values), /api/range, unknown var -> 404 JSON", frame_len) +
                             (bad.empty() ? std::string() : "; failed: " + d)};
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    fixtures::TempDir tmp;
    const auto data = tmp / "ref";
    const auto bundle = tmp / "bundle";

    std::vector<std::pair<std::string, Outcome>> results;
    auto record = [&](const std::string& name, const std::function<Outcome()>& fn) {
        const auto t = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fprintf(stderr, "  (%s took %.1fs)\n", name.c_str(), seconds_since(t));
        std::fflush(stdout);
        results.emplace_back(name, o);
    };

    record("1 gradient correctness", gradients);
    record("2 metric oracle", metric_oracle);

    const auto gen = fixtures::run_cli("gen --out " + q(data) + " --seed 42");
    if (gen.status != 0) {
        std::printf("FAIL setup: reference dataset generation failed: %s\n", gen.output.c_str());
        return 1;
    }
    const auto series = data::load_series(data);

    record("3 frozen-expert invariant", [&] { return frozen_experts(data, bundle); });
    record("4 router simplex", [&] { return simplex(bundle); });
    const auto samples = eval::experiment_samples(series, eval::ExperimentConfig{});
    record("5 diversity effect", [&] { return diversity(samples); });
    record("6 ordering reproduction", [&] { return ordering(series); });
    record("7 split exactness", [&] { return split(series); });
    record("8 determinism", [&] { return determinism(tmp.path(), data, bundle); });
    record("9 service contract", [&] { return service_contract(data); });

    int failed = 0;
    for (const auto& [name, o] : results) failed += !o.pass;
    std::printf("%d/%zu criteria passed (%.0fs)\n", static_cast<int>(results.size()) - failed, results.size(),
                seconds_since(t0));
    return failed == 0 ? 0 : 1;
}
