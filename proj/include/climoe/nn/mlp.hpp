#pragma once

// Dense multilayer perceptron with hand-derived gradients.
//
// Hidden layers use relu, the output layer is affine. Parameters live in one
// flat vector: for each layer, the weight matrix (out x in, row-major) and
// then the bias vector.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climoe/error.hpp"
#include "climoe/hash.hpp"
#include "climoe/rng.hpp"

namespace climoe::nn {

struct LayerShape {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;  // into the flat parameter vector
    std::size_t bias_offset = 0;

    std::size_t param_count() const { return in * out + out; }
};

struct MlpSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_dims;
    std::size_t output_dim = 1;

    void validate() const {
        if (input_dim == 0 || output_dim == 0) throw ConfigError("mlp: zero-width input or output");
        for (auto h : hidden_dims)
            if (h == 0) throw ConfigError("mlp: zero-width hidden layer");
    }

    std::vector<LayerShape> layers() const {
        std::vector<LayerShape> out;
        std::size_t in = input_dim;
        std::size_t offset = 0;
        auto push = [&](std::size_t width) {
            LayerShape l{in, width, offset, offset + in * width};
            offset += l.param_count();
            out.push_back(l);
            in = width;
        };
        for (auto h : hidden_dims) push(h);
        push(output_dim);
        return out;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers()) n += l.param_count();
        return n;
    }

    // Stable textual descriptor, e.g. "mlp:114-64-64-1:relu". Stored in
    // parameter files and hashed into ParamVector::spec_hash.
    std::string descriptor() const {
        std::string s = "mlp:" + std::to_string(input_dim);
        for (auto h : hidden_dims) s += "-" + std::to_string(h);
        s += "-" + std::to_string(output_dim) + ":relu";
        return s;
    }

    std::uint64_t hash() const { return fnv1a(descriptor()); }

    bool operator==(const MlpSpec&) const = default;
};

struct ParamVector {
    std::vector<double> values;
    std::uint64_t spec_hash = 0;

    std::size_t size() const { return values.size(); }
    // Bitwise fingerprint of the values; equal iff every double is bit-identical
    // (up to hash collisions).
    std::uint64_t fingerprint() const { return fnv1a(values); }

    bool operator==(const ParamVector&) const = default;
};

inline void require_compatible(const MlpSpec& spec, const ParamVector& p) {
    if (p.spec_hash != spec.hash() || p.values.size() != spec.param_count()) {
        throw ShapeError("parameter vector does not belong to " + spec.descriptor());
    }
}

// Glorot-uniform weights, zero biases. Deterministic in (spec, seed).
inline ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector p;
    p.spec_hash = spec.hash();
    p.values.assign(spec.param_count(), 0.0);
    SplitMix64 rng(hash_key(seed, spec.hash()));
    for (const auto& l : spec.layers()) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        for (std::size_t k = 0; k < l.in * l.out; ++k) {
            p.values[l.weight_offset + k] = rng.uniform(-limit, limit);
        }
    }
    return p;
}

// Dot product with four independent partial sums so the loop vectorizes
// without relaxing IEEE semantics. Summation order is fixed, hence
// results are reproducible.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s2) + (s1 + s3);
}

// Reusable activation buffers for one network shape. A workspace is not
// shared between threads; the (spec, params) pair it reads is.
class MlpWorkspace {
public:
    explicit MlpWorkspace(const MlpSpec& spec) : spec_(spec), layers_(spec.layers()) {
        spec_.validate();
        pre_.resize(layers_.size());
        act_.resize(layers_.size());
        delta_.resize(layers_.size());
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            pre_[l].resize(layers_[l].out);
            act_[l].resize(layers_[l].out);
            delta_[l].resize(layers_[l].out);
        }
        input_.resize(spec_.input_dim);
    }

    const MlpSpec& spec() const { return spec_; }

    // Runs the network and keeps every layer's activations for backward().
    std::span<const double> forward(const ParamVector& params, std::span<const double> input) {
        check_input(params, input);
        std::copy(input.begin(), input.end(), input_.begin());
        const double* w = params.values.data();
        const double* prev = input_.data();
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            const bool hidden = l + 1 < layers_.size();
            double* z = pre_[l].data();
            double* a = act_[l].data();
            for (std::size_t o = 0; o < L.out; ++o) {
                const double s = w[L.bias_offset + o] + dot(w + L.weight_offset + o * L.in, prev, L.in);
                z[o] = s;
                a[o] = hidden ? (s > 0.0 ? s : 0.0) : s;
            }
            prev = a;
        }
        return act_.back();
    }

    // Backpropagates `upstream` (d objective / d output) through the most
    // recent forward() call. Parameter gradients are ADDED into param_grad;
    // input_grad, when non-empty, is overwritten.
    void backward(const ParamVector& params, std::span<const double> upstream,
                  std::span<double> param_grad, std::span<double> input_grad = {}) {
        if (upstream.size() != spec_.output_dim)
            throw ShapeError("backward: upstream gradient has length " +
                             std::to_string(upstream.size()) + ", expected " +
                             std::to_string(spec_.output_dim));
        if (param_grad.size() != params.values.size())
            throw ShapeError("backward: parameter gradient buffer has wrong length");
        if (!input_grad.empty() && input_grad.size() != spec_.input_dim)
            throw ShapeError("backward: input gradient buffer has wrong length");

        const double* w = params.values.data();
        std::copy(upstream.begin(), upstream.end(), delta_.back().begin());
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& L = layers_[l];
            const double* prev = l == 0 ? input_.data() : act_[l - 1].data();
            const double* d = delta_[l].data();
            double* gw = param_grad.data() + L.weight_offset;
            double* gb = param_grad.data() + L.bias_offset;
            for (std::size_t o = 0; o < L.out; ++o) {
                const double g = d[o];
                gb[o] += g;
                if (g == 0.0) continue;
                double* grow = gw + o * L.in;
                for (std::size_t i = 0; i < L.in; ++i) grow[i] += g * prev[i];
            }
            double* next = nullptr;
            if (l > 0) {
                next = delta_[l - 1].data();
            } else if (!input_grad.empty()) {
                next = input_grad.data();
            }
            if (next == nullptr) continue;
            std::fill(next, next + L.in, 0.0);
            for (std::size_t o = 0; o < L.out; ++o) {
                const double g = d[o];
                if (g == 0.0) continue;
                const double* row = w + L.weight_offset + o * L.in;
                for (std::size_t i = 0; i < L.in; ++i) next[i] += row[i] * g;
            }
            if (l > 0) {
                const double* z = pre_[l - 1].data();
                for (std::size_t i = 0; i < L.in; ++i)
                    if (z[i] <= 0.0) next[i] = 0.0;
            }
        }
    }

private:
    void check_input(const ParamVector& params, std::span<const double> input) const {
        require_compatible(spec_, params);
        if (input.size() != spec_.input_dim)
            throw ShapeError("forward: input has length " + std::to_string(input.size()) +
                             ", expected " + std::to_string(spec_.input_dim));
    }

    MlpSpec spec_;
    std::vector<LayerShape> layers_;
    std::vector<double> input_;
    std::vector<std::vector<double>> pre_;
    std::vector<std::vector<double>> act_;
    std::vector<std::vector<double>> delta_;
};

// Mini-batch counterpart of MlpWorkspace: rows are samples. Matrix products
// go through Eigen, so results agree with the per-sample path to rounding,
// not bit for bit.
class MlpBatchWorkspace {
public:
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    explicit MlpBatchWorkspace(const MlpSpec& spec) : spec_(spec), layers_(spec.layers()) {
        spec_.validate();
        pre_.resize(layers_.size());
        act_.resize(layers_.size());
    }

    const MlpSpec& spec() const { return spec_; }

    // inputs: batch x input_dim. Returns batch x output_dim.
    const Matrix& forward(const ParamVector& params, const Matrix& inputs) {
        require_compatible(spec_, params);
        if (static_cast<std::size_t>(inputs.cols()) != spec_.input_dim)
            throw ShapeError("forward: batch has " + std::to_string(inputs.cols()) + " columns, expected " +
                             std::to_string(spec_.input_dim));
        input_ = &inputs;
        const Matrix* prev = &inputs;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            auto W = weights(params, L);
            auto b = bias(params, L);
            pre_[l].noalias() = *prev * W.transpose();
            pre_[l].rowwise() += b;
            if (l + 1 < layers_.size()) {
                act_[l] = pre_[l].cwiseMax(0.0);
            } else {
                act_[l] = pre_[l];
            }
            prev = &act_[l];
        }
        return act_.back();
    }

    // upstream: batch x output_dim. Adds parameter gradients into param_grad.
    void backward(const ParamVector& params, const Matrix& upstream, std::span<double> param_grad) {
        if (input_ == nullptr) throw ShapeError("backward called before forward");
        if (static_cast<std::size_t>(upstream.cols()) != spec_.output_dim || upstream.rows() != input_->rows())
            throw ShapeError("backward: upstream gradient has wrong shape");
        if (param_grad.size() != params.values.size())
            throw ShapeError("backward: parameter gradient buffer has wrong length");
        delta_ = upstream;
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& L = layers_[l];
            const Matrix& prev = l == 0 ? *input_ : act_[l - 1];
            Eigen::Map<Matrix> gW(param_grad.data() + L.weight_offset, static_cast<Eigen::Index>(L.out),
                                  static_cast<Eigen::Index>(L.in));
            Eigen::Map<Eigen::RowVectorXd> gb(param_grad.data() + L.bias_offset, static_cast<Eigen::Index>(L.out));
            gW.noalias() += delta_.transpose() * prev;
            gb += delta_.colwise().sum();
            if (l == 0) break;
            next_.noalias() = delta_ * weights(params, L);
            next_ = (pre_[l - 1].array() > 0.0).select(next_, 0.0);
            delta_.swap(next_);
        }
    }

private:
    static Eigen::Map<const Matrix> weights(const ParamVector& p, const LayerShape& L) {
        return {p.values.data() + L.weight_offset, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in)};
    }
    static Eigen::Map<const Eigen::RowVectorXd> bias(const ParamVector& p, const LayerShape& L) {
        return {p.values.data() + L.bias_offset, static_cast<Eigen::Index>(L.out)};
    }

    MlpSpec spec_;
    std::vector<LayerShape> layers_;
    const Matrix* input_ = nullptr;
    std::vector<Matrix> pre_, act_;
    Matrix delta_, next_;
};

inline std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                                   std::span<const double> input) {
    MlpWorkspace ws(spec);
    auto out = ws.forward(params, input);
    return {out.begin(), out.end()};
}

struct Gradients {
    std::vector<double> params;
    std::vector<double> input;
};

// Gradient of dot(forward(input), upstream) with respect to params and input.
inline Gradients backward(const MlpSpec& spec, const ParamVector& params,
                          std::span<const double> input, std::span<const double> upstream) {
    MlpWorkspace ws(spec);
    ws.forward(params, input);
    Gradients g;
    g.params.assign(params.size(), 0.0);
    g.input.assign(spec.input_dim, 0.0);
    ws.backward(params, upstream, g.params, g.input);
    return g;
}

}  // namespace climoe::nn
