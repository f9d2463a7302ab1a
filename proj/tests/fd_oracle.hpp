// Central-finite-difference gradient oracle for the tests. Deliberately
// independent of the tape: it only re-evaluates a scalar loss while nudging
// raw parameter values.
#pragma once

#include <functional>
#include <vector>

#include "ptf/nn/params.hpp"

namespace ptf::test {

// d(loss)/d(param) for every scalar in `store`, flattened in store order.
inline std::vector<double> finite_difference(nn::ParameterStore& store,
                                             const std::function<double()>& loss,
                                             double h = 1e-5) {
    std::vector<double> grads;
    for (int i = 0; i < store.size(); ++i) {
        Tensor& value = store.entry(i).value;
        for (int k = 0; k < value.numel(); ++k) {
            const double orig = value[k];
            value[k] = orig + h;
            const double up = loss();
            value[k] = orig - h;
            const double down = loss();
            value[k] = orig;
            grads.push_back((up - down) / (2.0 * h));
        }
    }
    return grads;
}

inline std::vector<double> flatten_grads(const nn::ParameterStore& store) {
    std::vector<double> grads;
    for (int i = 0; i < store.size(); ++i) {
        const Tensor& g = store.entry(i).grad;
        for (int k = 0; k < g.numel(); ++k) grads.push_back(g[k]);
    }
    return grads;
}

// Worst relative disagreement; small denominators fall back to a floor so
// near-zero gradients are compared absolutely.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                            double floor = 1e-2) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace ptf::test
