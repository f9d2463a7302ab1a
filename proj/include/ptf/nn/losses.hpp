#pragma once

#include <cmath>

#include "ptf/nn/graph.hpp"
#include "ptf/tensor.hpp"

namespace ptf::nn {

inline constexpr double kProbFloor = 1e-8;
inline constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)

// H(p || q) = -sum_i p_i log q_i, q clamped at kProbFloor inside the log.
inline double cross_entropy(const Tensor& p, const Tensor& q) {
    if (p.numel() != q.numel()) throw ContractError("cross_entropy width mismatch");
    double acc = 0.0;
    for (int i = 0; i < p.numel(); ++i)
        acc -= p[i] * std::log(q[i] > kProbFloor ? q[i] : kProbFloor);
    return acc;
}

// Taped variant with a fixed target distribution p.
inline Var cross_entropy(Graph& g, const Tensor& p, Var q) {
    if (p.numel() != g.val(q).numel()) throw ContractError("cross_entropy width mismatch");
    return g.neg(g.dot(g.constant(p), g.log_floor(q, kProbFloor)));
}

// Sum over dimensions of the diagonal-Gaussian log density.
inline double gaussian_log_prob(const Tensor& mean, const Tensor& log_std, const Tensor& action) {
    if (mean.numel() != log_std.numel() || mean.numel() != action.numel())
        throw ContractError("gaussian_log_prob width mismatch");
    double acc = 0.0;
    for (int i = 0; i < mean.numel(); ++i) {
        const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
        acc += -0.5 * kLogTwoPi - log_std[i] - 0.5 * z * z;
    }
    return acc;
}

inline Var gaussian_log_prob(Graph& g, Var mean, Var log_std, const Tensor& action) {
    Var a = g.constant(action);
    Var inv_std = g.exp(g.neg(log_std));
    Var z = g.mul(g.sub(a, mean), inv_std);
    Var per_dim = g.sub(g.scale(g.square(z), -0.5), log_std);
    return g.add_const(g.sum(per_dim), -0.5 * kLogTwoPi * action.numel());
}

inline double entropy_categorical(const Tensor& probs) {
    double acc = 0.0;
    for (int i = 0; i < probs.numel(); ++i)
        if (probs[i] > 0.0) acc -= probs[i] * std::log(probs[i]);
    return acc;
}

inline Var entropy_categorical(Graph& g, Var probs) {
    return g.neg(g.dot(probs, g.log_floor(probs, kProbFloor)));
}

// sum_d (log_std_d + 0.5 ln(2*pi*e))
inline double entropy_gaussian(const Tensor& log_std) {
    return log_std.sum() + 0.5 * (kLogTwoPi + 1.0) * log_std.numel();
}

inline Var entropy_gaussian(Graph& g, Var log_std) {
    const int d = g.val(log_std).numel();
    return g.add_const(g.sum(log_std), 0.5 * (kLogTwoPi + 1.0) * d);
}

}  // namespace ptf::nn
