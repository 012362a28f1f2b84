// climoe: dataset generation, training, evaluation and the data service.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "climoe/data/series.hpp"
#include "climoe/eval/experiment.hpp"
#include "climoe/moe/bundle.hpp"
#include "climoe/moe/variants.hpp"
#include "climoe/service/data_service.hpp"
#include "climoe/synth/storm.hpp"

namespace fs = std::filesystem;
using namespace climoe;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) out.push_back(tok);
    return out;
}

struct ModelFlags {
    std::size_t cell_stride = 10;
    int expert_epochs = 0;
    int router_epochs = 0;
    int baseline_epochs = 0;
    int joint_epochs = 0;
    int uniform_epochs = 0;
    double lambda = -1.0;
    double tau = 0.0;
    std::size_t batch = 0;

    void add(CLI::App* app) {
        app->add_option("--cell-stride", cell_stride, "Sample every Nth cell in each direction")->check(CLI::PositiveNumber);
        app->add_option("--expert-epochs", expert_epochs, "Epochs of selective expert training");
        app->add_option("--router-epochs", router_epochs, "Epochs of router training");
        app->add_option("--baseline-epochs", baseline_epochs, "Epochs of MLP baseline training");
        app->add_option("--joint-epochs", joint_epochs, "Epochs of joint training (default: budget-matched)");
        app->add_option("--uniform-epochs", uniform_epochs, "Epochs of uniform expert training (default: budget-matched)");
        app->add_option("--tau", tau, "Diversity distance cap");
        app->add_option("--batch", batch, "Mini-batch size");
    }

    eval::ExperimentConfig config() const {
        eval::ExperimentConfig c;
        c.cell_stride = cell_stride;
        if (expert_epochs > 0) c.model.expert_phase.epochs = expert_epochs;
        if (router_epochs > 0) c.model.router_phase.epochs = router_epochs;
        if (baseline_epochs > 0) c.model.baseline.epochs = baseline_epochs;
        c.model.joint_epochs = joint_epochs;
        c.model.uniform_epochs = uniform_epochs;
        if (lambda >= 0.0) c.model.expert_phase.lambda_div = lambda;
        if (tau > 0.0) c.model.expert_phase.div_cap = tau;
        if (batch > 0) {
            c.model.expert_phase.batch_size = c.model.router_phase.batch_size = c.model.baseline.batch_size = batch;
        }
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture-of-experts precipitation forecasting toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Write a synthetic storm dataset");
    std::string gen_out;
    synth::StormConfig storm;
    std::size_t grid_size = 100;
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--seed", storm.seed, "Generator seed");
    gen->add_option("--days", storm.days, "Number of days of hourly frames")->check(CLI::PositiveNumber);
    gen->add_option("--grid", grid_size, "Grid size R (R x R cells)")->check(CLI::PositiveNumber);

    // train-experts
    auto* tex = app.add_subcommand("train-experts", "Selective expert training with the diversity term");
    std::string data_dir, bundle_out;
    std::uint64_t seed = 1;
    int epochs = 0;
    ModelFlags tex_flags;
    tex->add_option("--data", data_dir, "Dataset directory")->envname("CLIMOE_DATA")->required()->check(CLI::ExistingDirectory);
    tex->add_option("--out", bundle_out, "Model bundle directory")->required();
    tex->add_option("--seed", seed, "Training seed");
    tex->add_option("--epochs", epochs, "Epochs (overrides --expert-epochs)");
    tex->add_option("--lambda", tex_flags.lambda, "Diversity weight")->check(CLI::NonNegativeNumber);
    tex_flags.add(tex);

    // train-router
    auto* trt = app.add_subcommand("train-router", "Router training over the frozen expert pool");
    int router_epochs = 10;
    std::size_t router_batch = 64;
    trt->add_option("--data", data_dir, "Dataset directory")->envname("CLIMOE_DATA")->required()->check(CLI::ExistingDirectory);
    trt->add_option("--out", bundle_out, "Model bundle directory produced by train-experts")->required();
    trt->add_option("--seed", seed, "Training seed");
    trt->add_option("--epochs", router_epochs, "Router epochs")->check(CLI::PositiveNumber);
    trt->add_option("--batch", router_batch, "Mini-batch size")->check(CLI::PositiveNumber);

    // eval
    auto* ev = app.add_subcommand("eval", "Multi-seed comparison of model variants");
    std::string variants_arg = "adaptive,no_pretraining,no_specialization,mlp_baseline";
    std::string seeds_arg = "1,2,3,4,5";
    std::string report_out = "report.json";
    ModelFlags ev_flags;
    ev->add_option("--data", data_dir, "Dataset directory")->envname("CLIMOE_DATA")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--variants", variants_arg, "Comma-separated variants");
    ev->add_option("--seeds", seeds_arg, "Comma-separated seeds");
    ev->add_option("--out", report_out, "Report JSON path");
    ev->add_option("--lambda", ev_flags.lambda, "Diversity weight")->check(CLI::NonNegativeNumber);
    ev_flags.add(ev);

    // serve
    auto* srv = app.add_subcommand("serve", "Read-only JSON data service");
    int port = 8080;
    std::string host = "0.0.0.0";
    std::string static_dir;
    srv->add_option("--data", data_dir, "Dataset directory")->envname("CLIMOE_DATA")->required()->check(CLI::ExistingDirectory);
    srv->add_option("--port", port, "Listen port")->check(CLI::Range(1, 65535));
    srv->add_option("--host", host, "Listen address");
    srv->add_option("--static", static_dir, "Static files served at /")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "climoe: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*gen) {
            const auto series = synth::generate(storm, synth::square_grid(grid_size));
            data::save_series(series, gen_out);
            std::cout << "wrote " << series.timestep_count() << " hourly frames x " << series.variables.size()
                      << " variables to " << gen_out << "\n";
        } else if (*tex) {
            auto cfg = tex_flags.config();
            if (epochs > 0) cfg.model.expert_phase.epochs = epochs;
            const auto series = data::load_series(data_dir);
            auto res = moe::train_experts_bundle(series, bundle_out, cfg, seed);
            std::cout << "trained " << res.pool.size() << " experts for " << cfg.model.expert_phase.epochs
                      << " epochs -> " << bundle_out << "\n";
        } else if (*trt) {
            if (!fs::exists(fs::path(bundle_out) / "pool" / moe::expert_file_name(0))) {
                std::cerr << "climoe: expert pool not found in " << bundle_out << "\n";
                return 1;
            }
            auto phase = moe::VariantConfig{}.router_phase;
            phase.epochs = router_epochs;
            phase.batch_size = router_batch;
            const auto series = data::load_series(data_dir);
            auto res = moe::train_router_bundle(series, bundle_out, phase, seed);
            const auto& last = res.log.entries.back();
            std::cout << "router trained for " << router_epochs << " epochs";
            if (last.contains("selected_epoch"))
                std::cout << ", kept epoch " << last["selected_epoch"].get<int>() << " (val MSE "
                          << last["val_loss"].get<double>() << ")";
            std::cout << "\n";
        } else if (*ev) {
            std::vector<moe::VariantKind> variants;
            for (const auto& v : split_list(variants_arg)) variants.push_back(moe::parse_variant(v));
            std::vector<std::uint64_t> seeds;
            for (const auto& s : split_list(seeds_arg)) seeds.push_back(std::stoull(s));
            const auto cfg = ev_flags.config();
            const auto report = eval::run_experiment(fs::path(data_dir), variants, seeds, cfg, [](const eval::RunResult& r) {
                std::fprintf(stderr, "%-18s seed %-4llu mse %.4f  (%.1fs)\n", std::string(moe::variant_name(r.variant)).c_str(),
                             static_cast<unsigned long long>(r.seed), r.metrics.mse, r.runtime_seconds);
            });
            nn::write_file(report_out, eval::report_to_json(report).dump(2) + "\n");
            std::cout << eval::render_table(report);
        } else if (*srv) {
            service::DataService svc(data::load_series(data_dir));
            httplib::Server server;
            service::mount(server, svc, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
            std::cout << "serving " << data_dir << " on " << host << ":" << port << std::endl;
            if (!server.listen(host, port)) {
                std::cerr << "climoe: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "climoe: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "climoe: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
