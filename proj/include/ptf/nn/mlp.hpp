#pragma once

#include <string>
#include <vector>

#include "ptf/nn/graph.hpp"
#include "ptf/nn/params.hpp"

namespace ptf::nn {

enum class Activation { Linear, Softmax, Sigmoid, Tanh };

struct HeadSpec {
    int width = 0;
    Activation act = Activation::Linear;
};

/// Fully connected net: tanh hidden layers, then one affine output layer per
/// head. Parameters live in a ParameterStore under "l<i>.W"/"l<i>.b" and
/// "head<j>.W"/"head<j>.b".
struct MlpSpec {
    int input = 0;
    std::vector<int> hidden;
    std::vector<HeadSpec> heads;

    void validate() const {
        if (input <= 0) throw ConfigError("mlp input width must be positive");
        for (int h : hidden)
            if (h <= 0) throw ConfigError("mlp hidden width must be positive");
        if (heads.empty()) throw ConfigError("mlp needs at least one head");
        for (const HeadSpec& h : heads)
            if (h.width <= 0) throw ConfigError("mlp head width must be positive");
    }

    int last_hidden() const { return hidden.empty() ? input : hidden.back(); }

    std::size_t param_count() const {
        std::size_t n = 0;
        int in = input;
        for (int h : hidden) {
            n += static_cast<std::size_t>(in) * h + h;
            in = h;
        }
        for (const HeadSpec& h : heads) n += static_cast<std::size_t>(in) * h.width + h.width;
        return n;
    }
};

inline std::string layer_w(int i) { return "l" + std::to_string(i) + ".W"; }
inline std::string layer_b(int i) { return "l" + std::to_string(i) + ".b"; }
inline std::string head_w(int j) { return "head" + std::to_string(j) + ".W"; }
inline std::string head_b(int j) { return "head" + std::to_string(j) + ".b"; }

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
inline void init_linear(ParameterStore& store, const std::string& wname, const std::string& bname,
                        int fan_in, int fan_out, Rng& rng) {
    Tensor w({fan_out, fan_in});
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < w.numel(); ++i) w[i] = u(rng);
    store.add(wname, std::move(w));
    store.add(bname, Tensor({fan_out}));
}

inline void init_mlp_params(const MlpSpec& spec, ParameterStore& store, Rng& rng) {
    spec.validate();
    auto init_layer = [&](const std::string& wname, const std::string& bname, int fan_in, int fan_out) {
        init_linear(store, wname, bname, fan_in, fan_out, rng);
    };
    int in = spec.input;
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        init_layer(layer_w(static_cast<int>(i)), layer_b(static_cast<int>(i)), in, spec.hidden[i]);
        in = spec.hidden[i];
    }
    for (std::size_t j = 0; j < spec.heads.size(); ++j)
        init_layer(head_w(static_cast<int>(j)), head_b(static_cast<int>(j)), in, spec.heads[j].width);
}

inline Tensor softmax_stable(const Tensor& z) {
    Tensor out(z.shape());
    double mx = z[0];
    for (int i = 1; i < z.numel(); ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    for (int i = 0; i < z.numel(); ++i) {
        out[i] = std::exp(z[i] - mx);
        sum += out[i];
    }
    for (int i = 0; i < z.numel(); ++i) out[i] /= sum;
    return out;
}

// Plain (untaped) forward pass; the fast path for acting and evaluation.
inline std::vector<Tensor> mlp_apply(const MlpSpec& spec, const ParameterStore& store,
                                     const Tensor& input) {
    if (input.numel() != spec.input) throw ConfigError("mlp input width mismatch");
    Tensor x = input;
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        const Tensor& W = store.value(layer_w(static_cast<int>(i)));
        const Tensor& b = store.value(layer_b(static_cast<int>(i)));
        Tensor y({W.rows()});
        for (int r = 0; r < W.rows(); ++r) {
            double acc = 0.0;
            for (int c = 0; c < W.cols(); ++c) acc += W.at(r, c) * x[c];
            y[r] = std::tanh(acc + b[r]);
        }
        x = std::move(y);
    }
    std::vector<Tensor> outs;
    outs.reserve(spec.heads.size());
    for (std::size_t j = 0; j < spec.heads.size(); ++j) {
        const Tensor& W = store.value(head_w(static_cast<int>(j)));
        const Tensor& b = store.value(head_b(static_cast<int>(j)));
        Tensor z({W.rows()});
        for (int r = 0; r < W.rows(); ++r) {
            double acc = 0.0;
            for (int c = 0; c < W.cols(); ++c) acc += W.at(r, c) * x[c];
            z[r] = acc + b[r];
        }
        switch (spec.heads[j].act) {
            case Activation::Linear:
                break;
            case Activation::Softmax:
                z = softmax_stable(z);
                break;
            case Activation::Sigmoid:
                for (int i = 0; i < z.numel(); ++i) z[i] = 1.0 / (1.0 + std::exp(-z[i]));
                break;
            case Activation::Tanh:
                for (int i = 0; i < z.numel(); ++i) z[i] = std::tanh(z[i]);
                break;
        }
        outs.push_back(std::move(z));
    }
    return outs;
}

// Taped forward pass for training.
inline std::vector<Var> mlp_apply(Graph& g, const MlpSpec& spec, ParameterStore& store,
                                  const Tensor& input) {
    if (input.numel() != spec.input) throw ConfigError("mlp input width mismatch");
    Var x = g.input(input);
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        Var z = g.affine(g.param(store, layer_w(static_cast<int>(i))), x,
                         g.param(store, layer_b(static_cast<int>(i))));
        x = g.tanh(z);
    }
    std::vector<Var> outs;
    outs.reserve(spec.heads.size());
    for (std::size_t j = 0; j < spec.heads.size(); ++j) {
        Var z = g.affine(g.param(store, head_w(static_cast<int>(j))), x,
                         g.param(store, head_b(static_cast<int>(j))));
        switch (spec.heads[j].act) {
            case Activation::Linear:
                break;
            case Activation::Softmax:
                z = g.softmax(z);
                break;
            case Activation::Sigmoid:
                z = g.sigmoid(z);
                break;
            case Activation::Tanh:
                z = g.tanh(z);
                break;
        }
        outs.push_back(z);
    }
    return outs;
}

}  // namespace ptf::nn
