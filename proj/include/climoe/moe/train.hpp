#pragma once

// Training procedures for the expert pool, the router and the ablations.
//
//   train_experts          selective two-expert training with a diversity term
//   train_experts_uniform  every expert, every batch, no diversity term
//   train_router           gate over a frozen pool
//   train_joint            experts and gate together from scratch
//   train_mlp              single network on MSE
//
// All procedures are deterministic in (inputs, config); batch order and
// expert selection come from SplitMix64 streams keyed by the config seed.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "climoe/data/samples.hpp"
#include "climoe/error.hpp"
#include "climoe/moe/model.hpp"
#include "climoe/nn/mlp.hpp"
#include "climoe/nn/optimizer.hpp"
#include "climoe/rng.hpp"

namespace climoe::moe {

struct TrainConfig {
    int epochs = 10;
    std::size_t batch_size = 64;
    double lambda_div = 0.01;
    // Above the roughly 17 pairwise distance of freshly initialized default experts.
    double div_cap = 20.0;
    std::uint64_t seed = 1;
    nn::OptimizerSettings optimizer;
    // Return the end-of-epoch snapshot with the lowest validation MSE
    // instead of the last one. Ignored when the validation partition is empty.
    bool keep_best_val = false;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be at least 1");
        if (batch_size < 1) throw ConfigError("batch size must be at least 1");
        if (!(lambda_div >= 0.0)) throw ConfigError("lambda must be non-negative");
        if (!(div_cap > 0.0)) throw ConfigError("diversity cap must be positive");
    }
};

struct TrainLog {
    std::vector<nlohmann::ordered_json> entries;

    void add(nlohmann::ordered_json e) { entries.push_back(std::move(e)); }
    void append(const TrainLog& other) { entries.insert(entries.end(), other.entries.begin(), other.entries.end()); }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& e : entries) out += e.dump() + "\n";
        return out;
    }
};

// Training-set sample indices in the order visited during `epoch`.
inline std::vector<std::size_t> epoch_order(std::span<const std::size_t> train, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(train.begin(), train.end());
    SplitMix64 rng(hash_key(seed, 0xb0, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

namespace detail {

inline std::vector<std::size_t> train_indices(const data::SampleSet& data) {
    auto idx = data.indices(data::Partition::train);
    if (idx.empty()) throw ConfigError("training partition is empty");
    return idx;
}

template <class Fn>
void for_each_batch(std::span<const std::size_t> order, std::size_t batch_size, Fn&& fn) {
    std::size_t b = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++b)
        fn(b, order.subspan(start, std::min(batch_size, order.size() - start)));
}

using Matrix = nn::MlpBatchWorkspace::Matrix;

inline void gather(const data::SampleSet& data, std::span<const std::size_t> batch, Matrix& x) {
    x.resize(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(data.input_dim));
    for (std::size_t r = 0; r < batch.size(); ++r) {
        auto in = data.input(batch[r]);
        std::copy(in.begin(), in.end(), x.row(static_cast<Eigen::Index>(r)).data());
    }
}

// Mean squared error of one network over a gathered batch; adds its gradient into grad.
inline double mse_batch(nn::MlpBatchWorkspace& ws, const nn::ParamVector& params, const data::SampleSet& data,
                        std::span<const std::size_t> batch, const Matrix& x, std::span<double> grad) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    const Matrix& y = ws.forward(params, x);
    Matrix up(y.rows(), 1);
    double loss = 0.0;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const double err = y(static_cast<Eigen::Index>(r), 0) - data.targets[batch[r]];
        loss += err * err;
        up(static_cast<Eigen::Index>(r), 0) = 2.0 * err * inv;
    }
    ws.backward(params, up, grad);
    return loss * inv;
}

inline void require_finite(double loss, const std::string& where) {
    if (!std::isfinite(loss)) throw NumericError("non-finite loss in " + where);
}

inline void zero(std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); }

inline double mlp_mse(const nn::MlpSpec& spec, const nn::ParamVector& params, const data::SampleSet& data,
                      std::span<const std::size_t> idx) {
    nn::MlpBatchWorkspace ws(spec);
    Matrix x;
    double sum = 0.0;
    for_each_batch(idx, 1024, [&](std::size_t, std::span<const std::size_t> chunk) {
        gather(data, chunk, x);
        const auto& y = ws.forward(params, x);
        for (std::size_t r = 0; r < chunk.size(); ++r) {
            const double e = y(static_cast<Eigen::Index>(r), 0) - data.targets[chunk[r]];
            sum += e * e;
        }
    });
    return sum / static_cast<double>(idx.size());
}

inline double mixture_mse(const RouterModel& router, const ExpertPool& pool, const data::SampleSet& data,
                          std::span<const std::size_t> idx) {
    const std::size_t E = pool.size();
    nn::MlpBatchWorkspace ews(pool.spec), rws(router.spec);
    Matrix x, eout;
    std::vector<double> w(E), e(E);
    double sum = 0.0;
    for_each_batch(idx, 1024, [&](std::size_t, std::span<const std::size_t> chunk) {
        gather(data, chunk, x);
        eout.resize(x.rows(), static_cast<Eigen::Index>(E));
        for (std::size_t j = 0; j < E; ++j) eout.col(static_cast<Eigen::Index>(j)) = ews.forward(pool.params[j], x).col(0);
        const auto& z = rws.forward(router.params, x);
        for (std::size_t r = 0; r < chunk.size(); ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            for (std::size_t k = 0; k < E; ++k) {
                w[k] = z(row, static_cast<Eigen::Index>(k));
                e[k] = eout(row, static_cast<Eigen::Index>(k));
            }
            softmax(w);
            const double err = combine(w, e) - data.targets[chunk[r]];
            sum += err * err;
        }
    });
    return sum / static_cast<double>(idx.size());
}

// Tracks the best end-of-epoch state by validation MSE.
template <class State>
struct BestVal {
    bool enabled = false;
    double loss = std::numeric_limits<double>::infinity();
    int epoch = 0;
    State state{};

    // Returns the validation loss recorded in the log (NaN when disabled).
    template <class Eval>
    double observe(int ep, Eval&& eval, const State& current) {
        if (!enabled) return std::numeric_limits<double>::quiet_NaN();
        const double v = eval();
        if (v < loss) {
            loss = v;
            epoch = ep;
            state = current;
        }
        return v;
    }
};

inline void note_val(nlohmann::ordered_json& entry, double v) {
    if (!std::isnan(v)) entry["val_loss"] = v;
}

}  // namespace detail

// Per epoch: draw a distinct pair (i, j), freeze every other expert, and
// minimise L_i + L_j + lambda * diversity over mini-batches, updating only
// experts i and j. All experts are frozen on return.
inline TrainLog train_experts(ExpertPool& pool, const data::SampleSet& data, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t E = pool.size();
    if (E < 2) throw ConfigError("train_experts: need at least two experts");
    const auto train = detail::train_indices(data);
    const std::size_t P = pool.spec.param_count();

    std::vector<nn::OptimState> opt(E, nn::OptimState(cfg.optimizer, P));
    SplitMix64 pair_rng(hash_key(cfg.seed, 0xa1));
    nn::MlpBatchWorkspace ws(pool.spec);
    detail::Matrix x;
    std::vector<double> gi(P), gj(P);
    TrainLog log;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto i = static_cast<std::size_t>(pair_rng.below(E));
        auto j = static_cast<std::size_t>(pair_rng.below(E - 1));
        if (j >= i) ++j;
        pool.frozen.assign(E, true);
        pool.frozen[i] = pool.frozen[j] = false;
        const auto before = pool.fingerprints();

        double sum_i = 0.0, sum_j = 0.0, sum_div = 0.0;
        std::size_t batches = 0;
        const auto order = epoch_order(train, cfg.seed, epoch);
        detail::for_each_batch(order, cfg.batch_size, [&](std::size_t b, std::span<const std::size_t> batch) {
            detail::zero(gi);
            detail::zero(gj);
            detail::gather(data, batch, x);
            const double li = detail::mse_batch(ws, pool.params[i], data, batch, x, gi);
            const double lj = detail::mse_batch(ws, pool.params[j], data, batch, x, gj);
            const double ldiv = add_diversity_gradient(pool.params[i], pool.params[j], cfg.div_cap, cfg.lambda_div, gi, gj);
            detail::require_finite(li + lj + cfg.lambda_div * ldiv,
                                   "expert training, epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(b) + ", experts " + std::to_string(i) + "/" + std::to_string(j));
            nn::optimizer_step(opt[i], pool.params[i], gi);
            nn::optimizer_step(opt[j], pool.params[j], gj);
            sum_i += li;
            sum_j += lj;
            sum_div += ldiv;
            ++batches;
        });

        const auto after = pool.fingerprints();
        for (std::size_t e = 0; e < E; ++e)
            if (pool.frozen[e] && before[e] != after[e])
                throw ContractError("frozen expert " + std::to_string(e) + " changed during epoch " + std::to_string(epoch));

        const double nb = static_cast<double>(batches);
        log.add({{"phase", "experts"},
                 {"epoch", epoch},
                 {"i", i},
                 {"j", j},
                 {"loss_i", sum_i / nb},
                 {"loss_j", sum_j / nb},
                 {"loss_div", sum_div / nb},
                 {"div_term", cfg.lambda_div * sum_div / nb}});
    }
    pool.freeze_all();
    return log;
}

// Ablation without specialization: no pair selection and no diversity term;
// every expert is updated on every batch.
inline TrainLog train_experts_uniform(ExpertPool& pool, const data::SampleSet& data, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t E = pool.size();
    const auto train = detail::train_indices(data);
    const std::size_t P = pool.spec.param_count();
    std::vector<nn::OptimState> opt(E, nn::OptimState(cfg.optimizer, P));
    nn::MlpBatchWorkspace ws(pool.spec);
    detail::Matrix x;
    std::vector<double> g(P);
    pool.frozen.assign(E, false);
    TrainLog log;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double sum = 0.0;
        std::size_t batches = 0;
        const auto order = epoch_order(train, cfg.seed, epoch);
        detail::for_each_batch(order, cfg.batch_size, [&](std::size_t b, std::span<const std::size_t> batch) {
            detail::gather(data, batch, x);
            for (std::size_t e = 0; e < E; ++e) {
                detail::zero(g);
                const double l = detail::mse_batch(ws, pool.params[e], data, batch, x, g);
                detail::require_finite(l, "uniform expert training, epoch " + std::to_string(epoch) + ", batch " +
                                              std::to_string(b) + ", expert " + std::to_string(e));
                nn::optimizer_step(opt[e], pool.params[e], g);
                sum += l;
            }
            ++batches;
        });
        log.add({{"phase", "experts"},
                 {"epoch", epoch},
                 {"selected", "all"},
                 {"loss_mean", sum / static_cast<double>(batches * E)},
                 {"loss_div", 0.0},
                 {"div_term", 0.0}});
    }
    pool.freeze_all();
    return log;
}

namespace detail {

// Gate backward for one sample: given expert outputs, gate weights and the
// combined prediction, writes d(objective)/d(logits) for upstream dy.
inline void gate_logit_grad(std::span<const double> w, std::span<const double> e, double y_hat, double dy,
                            std::span<double> dz) {
    for (std::size_t k = 0; k < w.size(); ++k) dz[k] = dy * w[k] * (e[k] - y_hat);
}

}  // namespace detail

struct MoeGradients {
    double loss = 0.0;
    std::vector<double> router;
    std::vector<std::vector<double>> experts;
};

// Squared error of the combined prediction for one sample and its gradient
// with respect to the router and every expert.
inline MoeGradients moe_sample_gradients(const RouterModel& router, const ExpertPool& pool,
                                         std::span<const double> x, double target) {
    const std::size_t E = pool.size();
    if (router.spec.output_dim != E) throw ShapeError("router width does not match pool size");
    std::vector<nn::MlpWorkspace> ews(E, nn::MlpWorkspace(pool.spec));
    std::vector<double> e(E), dz(E);
    for (std::size_t j = 0; j < E; ++j) e[j] = ews[j].forward(pool.params[j], x)[0];
    nn::MlpWorkspace rws(router.spec);
    auto z = rws.forward(router.params, x);
    std::vector<double> w(z.begin(), z.end());
    softmax(w);
    const double y_hat = combine(w, e);
    const double err = y_hat - target;
    MoeGradients g;
    g.loss = err * err;
    g.router.assign(router.params.size(), 0.0);
    detail::gate_logit_grad(w, e, y_hat, 2.0 * err, dz);
    rws.backward(router.params, dz, g.router);
    g.experts.assign(E, std::vector<double>(pool.spec.param_count(), 0.0));
    for (std::size_t j = 0; j < E; ++j) {
        const double up = 2.0 * err * w[j];
        ews[j].backward(pool.params[j], std::span<const double>(&up, 1), g.experts[j]);
    }
    return g;
}

// Router training over a frozen pool. Expert predictions are computed once;
// only router parameters receive gradient steps.
inline TrainLog train_router(RouterModel& router, const ExpertPool& pool, const data::SampleSet& data,
                             const TrainConfig& cfg) {
    cfg.validate();
    if (!pool.all_frozen()) throw ContractError("train_router: expert pool contains unfrozen experts");
    const std::size_t E = pool.size();
    if (router.spec.output_dim != E)
        throw ShapeError("train_router: router emits " + std::to_string(router.spec.output_dim) +
                         " weights for " + std::to_string(E) + " experts");
    nn::require_compatible(router.spec, router.params);
    const auto train = detail::train_indices(data);
    const auto before = pool.fingerprints();

    // Frozen expert outputs, [sample][expert].
    std::vector<double> cache(data.size() * E, 0.0);
    detail::Matrix x;
    {
        nn::MlpBatchWorkspace ews(pool.spec);
        detail::for_each_batch(train, 1024, [&](std::size_t, std::span<const std::size_t> chunk) {
            detail::gather(data, chunk, x);
            for (std::size_t j = 0; j < E; ++j) {
                const auto& y = ews.forward(pool.params[j], x);
                for (std::size_t r = 0; r < chunk.size(); ++r) cache[chunk[r] * E + j] = y(static_cast<Eigen::Index>(r), 0);
            }
        });
    }

    nn::OptimState opt(cfg.optimizer, router.params.size());
    nn::MlpBatchWorkspace rws(router.spec);
    std::vector<double> g(router.params.size()), w(E), dz(E);
    detail::Matrix up;
    const auto val = data.indices(data::Partition::val);
    detail::BestVal<nn::ParamVector> best;
    best.enabled = cfg.keep_best_val && !val.empty();
    TrainLog log;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double sum = 0.0;
        std::size_t batches = 0;
        const auto order = epoch_order(train, hash_key(cfg.seed, 0x7a), epoch);
        detail::for_each_batch(order, cfg.batch_size, [&](std::size_t b, std::span<const std::size_t> batch) {
            detail::zero(g);
            const double inv = 1.0 / static_cast<double>(batch.size());
            detail::gather(data, batch, x);
            const auto& z = rws.forward(router.params, x);
            up.resize(z.rows(), z.cols());
            double loss = 0.0;
            for (std::size_t r = 0; r < batch.size(); ++r) {
                const auto row = static_cast<Eigen::Index>(r);
                const auto i = batch[r];
                for (std::size_t k = 0; k < E; ++k) w[k] = z(row, static_cast<Eigen::Index>(k));
                softmax(w);
                std::span<const double> e(cache.data() + i * E, E);
                const double y_hat = combine(w, e);
                const double err = y_hat - data.targets[i];
                loss += err * err;
                detail::gate_logit_grad(w, e, y_hat, 2.0 * err * inv, dz);
                for (std::size_t k = 0; k < E; ++k) up(row, static_cast<Eigen::Index>(k)) = dz[k];
            }
            loss *= inv;
            detail::require_finite(loss, "router training, epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            rws.backward(router.params, up, g);
            nn::optimizer_step(opt, router.params, g);
            sum += loss;
            ++batches;
        });
        nlohmann::ordered_json entry{{"phase", "router"}, {"epoch", epoch}, {"loss", sum / static_cast<double>(batches)}};
        detail::note_val(entry, best.observe(epoch, [&] { return detail::mixture_mse(router, pool, data, val); }, router.params));
        log.add(std::move(entry));
    }
    if (best.enabled) {
        router.params = best.state;
        log.add({{"phase", "router"}, {"selected_epoch", best.epoch}, {"val_loss", best.loss}});
    }
    if (pool.fingerprints() != before) throw ContractError("train_router: frozen expert parameters changed");
    return log;
}

// Experts and router trained together end to end on the combined MSE.
inline TrainLog train_joint(RouterModel& router, ExpertPool& pool, const data::SampleSet& data,
                            const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t E = pool.size();
    if (router.spec.output_dim != E) throw ShapeError("train_joint: router width does not match pool size");
    const auto train = detail::train_indices(data);
    const std::size_t P = pool.spec.param_count();
    pool.frozen.assign(E, false);

    nn::OptimState ropt(cfg.optimizer, router.params.size());
    std::vector<nn::OptimState> eopt(E, nn::OptimState(cfg.optimizer, P));
    nn::MlpBatchWorkspace rws(router.spec);
    std::vector<nn::MlpBatchWorkspace> ews(E, nn::MlpBatchWorkspace(pool.spec));
    std::vector<double> rg(router.params.size()), w(E), e(E), dz(E);
    std::vector<std::vector<double>> eg(E, std::vector<double>(P));
    detail::Matrix x, rup, eout, eup(0, 1);
    const auto val = data.indices(data::Partition::val);
    struct Snapshot {
        nn::ParamVector router;
        std::vector<nn::ParamVector> experts;
    };
    detail::BestVal<Snapshot> best;
    best.enabled = cfg.keep_best_val && !val.empty();
    TrainLog log;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double sum = 0.0;
        std::size_t batches = 0;
        const auto order = epoch_order(train, hash_key(cfg.seed, 0x7a), epoch);
        detail::for_each_batch(order, cfg.batch_size, [&](std::size_t b, std::span<const std::size_t> batch) {
            detail::zero(rg);
            for (auto& v : eg) detail::zero(v);
            const double inv = 1.0 / static_cast<double>(batch.size());
            const auto B = static_cast<Eigen::Index>(batch.size());
            const auto EE = static_cast<Eigen::Index>(E);
            detail::gather(data, batch, x);
            eout.resize(B, EE);
            for (std::size_t j = 0; j < E; ++j) eout.col(static_cast<Eigen::Index>(j)) = ews[j].forward(pool.params[j], x).col(0);
            const auto& z = rws.forward(router.params, x);
            rup.resize(B, EE);
            detail::Matrix eupall(B, EE);
            double loss = 0.0;
            for (Eigen::Index r = 0; r < B; ++r) {
                for (std::size_t k = 0; k < E; ++k) {
                    w[k] = z(r, static_cast<Eigen::Index>(k));
                    e[k] = eout(r, static_cast<Eigen::Index>(k));
                }
                softmax(w);
                const double y_hat = combine(w, e);
                const double err = y_hat - data.targets[batch[static_cast<std::size_t>(r)]];
                loss += err * err;
                const double dy = 2.0 * err * inv;
                detail::gate_logit_grad(w, e, y_hat, dy, dz);
                for (std::size_t k = 0; k < E; ++k) {
                    rup(r, static_cast<Eigen::Index>(k)) = dz[k];
                    eupall(r, static_cast<Eigen::Index>(k)) = dy * w[k];
                }
            }
            loss *= inv;
            detail::require_finite(loss, "joint training, epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            rws.backward(router.params, rup, rg);
            for (std::size_t j = 0; j < E; ++j) {
                eup = eupall.col(static_cast<Eigen::Index>(j));
                ews[j].backward(pool.params[j], eup, eg[j]);
            }
            nn::optimizer_step(ropt, router.params, rg);
            for (std::size_t j = 0; j < E; ++j) nn::optimizer_step(eopt[j], pool.params[j], eg[j]);
            sum += loss;
            ++batches;
        });
        nlohmann::ordered_json entry{{"phase", "joint"}, {"epoch", epoch}, {"loss", sum / static_cast<double>(batches)}};
        if (best.enabled)
            detail::note_val(entry, best.observe(epoch, [&] { return detail::mixture_mse(router, pool, data, val); },
                                                 Snapshot{router.params, pool.params}));
        log.add(std::move(entry));
    }
    if (best.enabled) {
        router.params = best.state.router;
        pool.params = best.state.experts;
        log.add({{"phase", "joint"}, {"selected_epoch", best.epoch}, {"val_loss", best.loss}});
    }
    pool.freeze_all();
    return log;
}

inline TrainLog train_mlp(const nn::MlpSpec& spec, nn::ParamVector& params, const data::SampleSet& data,
                          const TrainConfig& cfg) {
    cfg.validate();
    const auto train = detail::train_indices(data);
    nn::OptimState opt(cfg.optimizer, params.size());
    nn::MlpBatchWorkspace ws(spec);
    detail::Matrix x;
    std::vector<double> g(params.size());
    const auto val = data.indices(data::Partition::val);
    detail::BestVal<nn::ParamVector> best;
    best.enabled = cfg.keep_best_val && !val.empty();
    TrainLog log;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double sum = 0.0;
        std::size_t batches = 0;
        const auto order = epoch_order(train, cfg.seed, epoch);
        detail::for_each_batch(order, cfg.batch_size, [&](std::size_t b, std::span<const std::size_t> batch) {
            detail::zero(g);
            detail::gather(data, batch, x);
            const double l = detail::mse_batch(ws, params, data, batch, x, g);
            detail::require_finite(l, "mlp training, epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            nn::optimizer_step(opt, params, g);
            sum += l;
            ++batches;
        });
        nlohmann::ordered_json entry{{"phase", "mlp"}, {"epoch", epoch}, {"loss", sum / static_cast<double>(batches)}};
        detail::note_val(entry, best.observe(epoch, [&] { return detail::mlp_mse(spec, params, data, val); }, params));
        log.add(std::move(entry));
    }
    if (best.enabled) {
        params = best.state;
        log.add({{"phase", "mlp"}, {"selected_epoch", best.epoch}, {"val_loss", best.loss}});
    }
    return log;
}

}  // namespace climoe::moe
