#pragma once

#include <memory>
#include <string>
#include <unordered_map>

#include "ptf/envs/types.hpp"
#include "ptf/nn/losses.hpp"
#include "ptf/nn/mlp.hpp"

namespace ptf::agents {

using envs::Action;
using envs::ActionSpace;

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;
inline constexpr const char* kLogStdParam = "log_std";

// Discrete: softmax over |A|. Continuous: tanh-bounded mean head plus a
// state-independent log_std parameter clamped to [kLogStdMin, kLogStdMax].
inline nn::MlpSpec make_actor_spec(int obs_width, const ActionSpace& space) {
    nn::MlpSpec spec;
    spec.input = obs_width;
    spec.hidden = {64, 64};
    spec.heads = {{space.n, space.discrete ? nn::Activation::Softmax : nn::Activation::Tanh}};
    return spec;
}

inline nn::MlpSpec make_critic_spec(int obs_width) {
    nn::MlpSpec spec;
    spec.input = obs_width;
    spec.hidden = {64, 64};
    spec.heads = {{1, nn::Activation::Linear}};
    return spec;
}

inline void init_actor_params(const nn::MlpSpec& spec, const ActionSpace& space,
                              nn::ParameterStore& store, Rng& rng) {
    nn::init_mlp_params(spec, store, rng);
    if (!space.discrete) store.add(kLogStdParam, Tensor({space.n}));
}

struct PolicyOutput {
    ActionSpace space;
    Tensor probs;    // discrete
    Tensor mean;     // continuous
    Tensor log_std;  // continuous, already clamped
};

inline double clamp_log_std(double v) {
    return v < kLogStdMin ? kLogStdMin : (v > kLogStdMax ? kLogStdMax : v);
}

inline PolicyOutput actor_eval(const nn::MlpSpec& spec, const nn::ParameterStore& store,
                               const ActionSpace& space, const Tensor& obs) {
    PolicyOutput out;
    out.space = space;
    auto heads = nn::mlp_apply(spec, store, obs);
    if (space.discrete) {
        out.probs = std::move(heads[0]);
    } else {
        out.mean = std::move(heads[0]);
        out.log_std = store.value(kLogStdParam);
        for (int i = 0; i < out.log_std.numel(); ++i)
            out.log_std[i] = clamp_log_std(out.log_std[i]);
    }
    return out;
}

struct PolicyVars {
    nn::Var probs;
    nn::Var mean;
    nn::Var log_std;
};

inline PolicyVars actor_eval(nn::Graph& g, const nn::MlpSpec& spec, nn::ParameterStore& store,
                             const ActionSpace& space, const Tensor& obs) {
    PolicyVars out;
    auto heads = nn::mlp_apply(g, spec, store, obs);
    if (space.discrete) {
        out.probs = heads[0];
    } else {
        out.mean = heads[0];
        out.log_std = g.clamp(g.param(store, kLogStdParam), kLogStdMin, kLogStdMax);
    }
    return out;
}

inline Action sample_action(const PolicyOutput& p, Rng& rng) {
    if (p.space.discrete) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double r = u(rng);
        for (int i = 0; i < p.probs.numel(); ++i) {
            r -= p.probs[i];
            if (r <= 0.0) return Action::discrete(i);
        }
        return Action::discrete(p.probs.numel() - 1);
    }
    Tensor a({p.space.n});
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < p.space.n; ++i) {
        const double v = p.mean[i] + std::exp(p.log_std[i]) * z(rng);
        a[i] = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    }
    return Action::continuous(std::move(a));
}

// Mode of the distribution: argmax / mean.
inline Action greedy_action(const PolicyOutput& p) {
    if (p.space.discrete) return Action::discrete(p.probs.argmax());
    return Action::continuous(p.mean);
}

inline double action_log_prob(const PolicyOutput& p, const Action& a) {
    if (p.space.discrete) {
        const double q = p.probs[a.index];
        return std::log(q > nn::kProbFloor ? q : nn::kProbFloor);
    }
    return nn::gaussian_log_prob(p.mean, p.log_std, a.vec);
}

inline nn::Var action_log_prob(nn::Graph& g, const PolicyVars& p, const ActionSpace& space,
                               const Action& a) {
    if (space.discrete) return g.log_floor(g.pick(p.probs, a.index), nn::kProbFloor);
    return nn::gaussian_log_prob(g, p.mean, p.log_std, a.vec);
}

inline double policy_entropy(const PolicyOutput& p) {
    return p.space.discrete ? nn::entropy_categorical(p.probs) : nn::entropy_gaussian(p.log_std);
}

/// A frozen actor loaded from disk. Evaluations are memoized by observation
/// bytes; results are immutable, so the cache is purely a speed lever for
/// tasks that revisit states (grid worlds).
class SourcePolicy {
public:
    SourcePolicy() = default;
    SourcePolicy(nn::MlpSpec spec, nn::ParameterStore params, ActionSpace space)
        : spec_(std::move(spec)), params_(std::move(params)), space_(space) {}

    const ActionSpace& space() const { return space_; }
    const nn::MlpSpec& spec() const { return spec_; }
    const nn::ParameterStore& params() const { return params_; }
    int obs_width() const { return spec_.input; }

    const PolicyOutput& eval(const Tensor& obs) const {
        const std::string key(reinterpret_cast<const char*>(obs.data().data()),
                              obs.data().size() * sizeof(double));
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        PolicyOutput out = actor_eval(spec_, params_, space_, obs);
        if (cache_.size() >= kCacheCap) return (cache_temp_ = std::move(out));
        return cache_.emplace(std::move(key), std::move(out)).first->second;
    }

    // Whether this policy "selects" the action: argmax match for discrete
    // actions, per-dimension 95% interval (|a-mu| <= 1.96 sigma) otherwise.
    bool selects(const Tensor& obs, const Action& a, double sigma_floor = 1e-3) const {
        const PolicyOutput& p = eval(obs);
        if (space_.discrete) return a.index == p.probs.argmax();
        for (int d = 0; d < space_.n; ++d) {
            double sigma = std::exp(p.log_std[d]);
            if (sigma < sigma_floor) sigma = sigma_floor;
            if (std::abs(a.vec[d] - p.mean[d]) > 1.96 * sigma) return false;
        }
        return true;
    }

private:
    static constexpr std::size_t kCacheCap = 1 << 18;

    nn::MlpSpec spec_;
    nn::ParameterStore params_;
    ActionSpace space_{};
    mutable std::unordered_map<std::string, PolicyOutput> cache_;
    mutable PolicyOutput cache_temp_;
};

}  // namespace ptf::agents
