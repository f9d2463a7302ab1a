#pragma once

#include <cmath>
#include <string>
#include <unordered_map>

#include "ptf/nn/params.hpp"

namespace ptf::nn {

struct AdamConfig {
    double lr = 3e-4;
    double b1 = 0.9;
    double b2 = 0.999;
    double eps = 1e-8;
};

/// Standard Adam with bias correction. Moment tensors mirror the parameter
/// store and are created lazily on the first step.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : cfg_(cfg) {
        if (cfg_.b1 <= 0.0 || cfg_.b1 >= 1.0 || cfg_.b2 <= 0.0 || cfg_.b2 >= 1.0)
            throw ConfigError("adam decay rates must be in (0,1)");
        if (cfg_.eps <= 0.0) throw ConfigError("adam stabilizer must be positive");
    }

    const AdamConfig& config() const { return cfg_; }
    long long steps() const { return t_; }

    // One update over every entry of the store; gradients are zeroed after.
    void step(ParameterStore& params) {
        ++t_;
        const double corr1 = 1.0 - std::pow(cfg_.b1, static_cast<double>(t_));
        const double corr2 = 1.0 - std::pow(cfg_.b2, static_cast<double>(t_));
        for (int i = 0; i < params.size(); ++i) {
            auto& e = params.entry(i);
            auto& mom = moments_[e.name];
            if (mom.first.empty()) {
                mom.first = Tensor(e.value.shape());
                mom.second = Tensor(e.value.shape());
            }
            Tensor& m = mom.first;
            Tensor& v = mom.second;
            for (int k = 0; k < e.value.numel(); ++k) {
                const double g = e.grad[k];
                m[k] = cfg_.b1 * m[k] + (1.0 - cfg_.b1) * g;
                v[k] = cfg_.b2 * v[k] + (1.0 - cfg_.b2) * g * g;
                const double mhat = m[k] / corr1;
                const double vhat = v[k] / corr2;
                e.value[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            e.grad.fill(0.0);
        }
    }

private:
    AdamConfig cfg_;
    long long t_ = 0;
    std::unordered_map<std::string, std::pair<Tensor, Tensor>> moments_;
};

}  // namespace ptf::nn
