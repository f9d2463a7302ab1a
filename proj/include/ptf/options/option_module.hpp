#pragma once

#include <mutex>
#include <optional>
#include <vector>

#include "ptf/agents/policy.hpp"
#include "ptf/nn/adam.hpp"
#include "ptf/options/replay.hpp"

namespace ptf::options {

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    double decrement = 1e-3;  // per episode

    double value(long long episodes) const {
        const double v = start - decrement * static_cast<double>(episodes);
        return v < end ? end : v;
    }
};

struct OptionConfig {
    double gamma = 0.99;
    double option_lr = 1e-3;   // Adam on the option-value network
    double beta_lr = 1e-3;     // plain gradient step on the termination head
    double xi = 1e-3;          // termination regularizer
    int batch_size = 32;
    std::size_t replay_capacity = 100000;
    long long target_sync_episodes = 1000;
    EpsilonSchedule epsilon;
    double sigma_floor = 1e-3;  // continuous source_selects
    std::vector<int> trunk_hidden{32, 32};
};

/// The option service: frozen source policies as intra-option policies, a
/// shared-trunk option-value network with a sigmoid termination head, the
/// epsilon-greedy policy over options, and the off-policy value/termination
/// updates. All mutation is serialized internally.
class OptionModule {
public:
    OptionModule(std::vector<agents::SourcePolicy> sources, int obs_width, OptionConfig cfg,
                 Rng& init_rng)
        : sources_(std::move(sources)),
          cfg_(cfg),
          buffer_(cfg.replay_capacity),
          adam_(nn::AdamConfig{cfg.option_lr, 0.9, 0.999, 1e-8}) {
        if (sources_.empty()) throw ConfigError("option module needs at least one source policy");
        for (const auto& s : sources_)
            if (s.obs_width() != obs_width)
                throw ConfigError("source policy observation width does not match the task");
        const int n = n_options();
        trunk_spec_.input = obs_width;
        trunk_spec_.hidden = cfg_.trunk_hidden;
        trunk_spec_.heads = {{n, nn::Activation::Linear}};  // Q head
        nn::init_mlp_params(trunk_spec_, theta_o_, init_rng);
        nn::init_linear(theta_beta_, "beta.W", "beta.b", trunk_spec_.last_hidden(), n, init_rng);
        // Target starts as a copy of the live network.
        nn::init_mlp_params(trunk_spec_, theta_o_target_, init_rng);
        theta_o_target_.copy_values_from(theta_o_);
    }

    int n_options() const { return static_cast<int>(sources_.size()); }
    const agents::SourcePolicy& source(int o) const { return sources_[static_cast<std::size_t>(o)]; }
    const OptionConfig& config() const { return cfg_; }

    // Epsilon-greedy over Q_o; exact ties are broken uniformly.
    int select_option(const Tensor& s, double epsilon, Rng& rng) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < epsilon) {
            std::uniform_int_distribution<int> pick(0, n_options() - 1);
            return pick(rng);
        }
        const Tensor q = q_values_locked(s, theta_o_);
        double best = q[0];
        for (int i = 1; i < q.numel(); ++i) best = std::max(best, q[i]);
        ties_.clear();
        for (int i = 0; i < q.numel(); ++i)
            if (q[i] == best) ties_.push_back(i);
        if (ties_.size() == 1) return ties_[0];
        std::uniform_int_distribution<std::size_t> pick(0, ties_.size() - 1);
        return ties_[pick(rng)];
    }

    double beta(const Tensor& s, int o) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        return beta_values_locked(s)[o];
    }

    bool sample_termination(const Tensor& s, int o, Rng& rng) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return u(rng) < beta_values_locked(s)[o];
    }

    Tensor q_values(const Tensor& s) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        return q_values_locked(s, theta_o_);
    }

    Tensor q_values_target(const Tensor& s) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        return q_values_locked(s, theta_o_target_);
    }

    // U(s',o) = (1-beta(s',o)) Q'(s',o) + beta(s',o) max_o' Q'(s',o'),
    // target Q, live termination head.
    double option_value_upon_arrival(const Tensor& s2, int o) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        const Tensor q = q_values_locked(s2, theta_o_target_);
        const double b = beta_values_locked(s2)[o];
        double mx = q[0];
        for (int i = 1; i < q.numel(); ++i) mx = std::max(mx, q[i]);
        return (1.0 - b) * q[o] + b * mx;
    }

    void store_transition(Transition t) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        buffer_.push(std::move(t));
    }

    ReplayBuffer& buffer() { return buffer_; }

    // One batch of the off-policy option-value regression. Each transition
    // updates every option whose source policy selects its action; batches
    // with no matching pair leave the network untouched. Returns the loss, or
    // nullopt when the buffer is too small (no-op).
    std::optional<double> update_option_values(Rng& rng) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        const std::size_t n = static_cast<std::size_t>(cfg_.batch_size);
        if (buffer_.size() < n) return std::nullopt;
        auto batch = buffer_.sample(n, rng);
        nn::Graph g;
        nn::Var total{};
        bool any = false;
        for (const Transition* t : batch) {
            nn::Var feats{};
            nn::Var qvar{};
            for (int o = 0; o < n_options(); ++o) {
                if (!sources_[static_cast<std::size_t>(o)].selects(t->s, t->a, cfg_.sigma_floor))
                    continue;
                if (!feats.valid()) {
                    feats = trunk_features(g, theta_o_, t->s);
                    qvar = g.affine(g.param(theta_o_, nn::head_w(0)), feats,
                                    g.param(theta_o_, nn::head_b(0)));
                }
                const double y = t->done
                                     ? t->r
                                     : t->r + cfg_.gamma * option_value_upon_arrival(t->s2, o);
                nn::Var err = g.square(g.sub(g.constant(Tensor::scalar(y)), g.pick(qvar, o)));
                total = any ? g.add(total, err) : err;
                any = true;
            }
        }
        if (!any) return std::nullopt;
        nn::Var loss = g.scale(total, 1.0 / cfg_.batch_size);
        const double value = g.scalar_val(loss);
        g.backward(loss);
        adam_.step(theta_o_);
        return value;
    }

    // theta_beta <- theta_beta - beta_lr * dbeta(s',o)/dtheta_beta * (A + xi)
    // with A = Q(s',o) - max_o' Q(s',o') held constant.
    void termination_step(const Tensor& s2, int o) {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        const Tensor q = q_values_locked(s2, theta_o_);
        double mx = q[0];
        for (int i = 1; i < q.numel(); ++i) mx = std::max(mx, q[i]);
        const double advantage = q[o] - mx;

        nn::Graph g;
        const Tensor feats = trunk_features_plain(theta_o_, s2);
        nn::Var z = g.affine(g.param(theta_beta_, "beta.W"), g.constant(feats),
                             g.param(theta_beta_, "beta.b"));
        g.backward(g.pick(g.sigmoid(z), o));
        const double scale = cfg_.beta_lr * (advantage + cfg_.xi);
        for (int i = 0; i < theta_beta_.size(); ++i) {
            auto& e = theta_beta_.entry(i);
            for (int k = 0; k < e.value.numel(); ++k) e.value[k] -= scale * e.grad[k];
            e.grad.fill(0.0);
        }
    }

    void sync_target() {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        theta_o_target_.copy_values_from(theta_o_);
    }

    // Episode bookkeeping: epsilon decays per episode, target copies on the
    // configured cadence (episodes 1000, 2000, ...).
    void note_episode_end() {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        ++episodes_;
        if (cfg_.target_sync_episodes > 0 && episodes_ % cfg_.target_sync_episodes == 0)
            sync_target();
    }

    double epsilon() {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        return cfg_.epsilon.value(episodes_);
    }

    long long episodes_completed() {
        std::lock_guard<std::recursive_mutex> lock(mu_);
        return episodes_;
    }

    nn::ParameterStore& value_params() { return theta_o_; }
    nn::ParameterStore& termination_params() { return theta_beta_; }
    const nn::MlpSpec& trunk_spec() const { return trunk_spec_; }

private:
    Tensor trunk_features_plain(const nn::ParameterStore& store, const Tensor& obs) const {
        Tensor x = obs;
        for (std::size_t i = 0; i < trunk_spec_.hidden.size(); ++i) {
            const Tensor& W = store.value(nn::layer_w(static_cast<int>(i)));
            const Tensor& b = store.value(nn::layer_b(static_cast<int>(i)));
            Tensor y({W.rows()});
            for (int r = 0; r < W.rows(); ++r) {
                double acc = 0.0;
                for (int c = 0; c < W.cols(); ++c) acc += W.at(r, c) * x[c];
                y[r] = std::tanh(acc + b[r]);
            }
            x = std::move(y);
        }
        return x;
    }

    nn::Var trunk_features(nn::Graph& g, nn::ParameterStore& store, const Tensor& obs) const {
        nn::Var x = g.input(obs);
        for (std::size_t i = 0; i < trunk_spec_.hidden.size(); ++i)
            x = g.tanh(g.affine(g.param(store, nn::layer_w(static_cast<int>(i))), x,
                                g.param(store, nn::layer_b(static_cast<int>(i)))));
        return x;
    }

    Tensor q_values_locked(const Tensor& s, const nn::ParameterStore& store) const {
        return nn::mlp_apply(trunk_spec_, store, s)[0];
    }

    Tensor beta_values_locked(const Tensor& s) const {
        const Tensor feats = trunk_features_plain(theta_o_, s);
        const Tensor& W = theta_beta_.value("beta.W");
        const Tensor& b = theta_beta_.value("beta.b");
        Tensor out({W.rows()});
        for (int r = 0; r < W.rows(); ++r) {
            double acc = 0.0;
            for (int c = 0; c < W.cols(); ++c) acc += W.at(r, c) * feats[c];
            out[r] = 1.0 / (1.0 + std::exp(-(acc + b[r])));
        }
        return out;
    }

    std::vector<agents::SourcePolicy> sources_;
    OptionConfig cfg_;
    nn::MlpSpec trunk_spec_;
    nn::ParameterStore theta_o_;
    nn::ParameterStore theta_beta_;
    nn::ParameterStore theta_o_target_;
    ReplayBuffer buffer_;
    nn::AdamState adam_;
    long long episodes_ = 0;
    std::vector<int> ties_;
    std::recursive_mutex mu_;
};

}  // namespace ptf::options
