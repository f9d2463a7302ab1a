#pragma once

#include <algorithm>
#include <numeric>

#include "ptf/agents/a3c.hpp"

namespace ptf::agents {

struct PpoConfig {
    double gamma = 0.99;
    double learning_rate = 3e-4;
    double clip_ratio = 0.2;
    double entropy_coef = 0.005;
    int epochs = 4;
    int minibatch = 32;
    int horizon = 128;
    int option_update_every = 20;  // cadence of option-module updates while collecting
    long long episode_budget = 5000;
    bool track_recent_obs = false;
};

// Clipped-surrogate PPO loss over one minibatch (indices into the batch):
//   mean_i [ -min(ratio_i A_i, clip(ratio_i, 1 +- eps) A_i)
//            + (R_i - V(s_i))^2 - c_H H(pi(s_i)) + w_i L_H ]
// Old log-probs and advantages are constants. Returns the loss value after
// accumulating gradients.
inline double ppo_loss(ActorCritic& ac, const std::vector<RolloutStep>& batch,
                       const std::vector<double>& returns, const std::vector<double>& advantages,
                       const std::vector<std::size_t>& idx, const PpoConfig& cfg,
                       const std::vector<const DistillTarget*>* distill = nullptr) {
    if (idx.empty()) throw ContractError("ppo_loss on empty minibatch");
    nn::Graph g;
    nn::Var total{};
    auto accumulate = [&](nn::Var v) { total = total.valid() ? g.add(total, v) : v; };
    for (std::size_t i : idx) {
        const RolloutStep& st = batch[i];
        PolicyVars pv = actor_eval(g, ac.actor_spec, ac.actor, ac.space, st.s);
        nn::Var logp = action_log_prob(g, pv, ac.space, st.a);
        nn::Var ratio = g.exp(g.add_const(logp, -st.old_logp));
        nn::Var surrogate = g.min_elem(
            g.scale(ratio, advantages[i]),
            g.scale(g.clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio), advantages[i]));
        accumulate(g.neg(surrogate));

        nn::Var v = nn::mlp_apply(g, ac.critic_spec, ac.critic, st.s)[0];
        accumulate(g.square(g.sub(g.constant(Tensor::scalar(returns[i])), g.pick(v, 0))));

        if (cfg.entropy_coef != 0.0) {
            nn::Var ent = ac.space.discrete ? nn::entropy_categorical(g, pv.probs)
                                            : nn::entropy_gaussian(g, pv.log_std);
            accumulate(g.scale(ent, -cfg.entropy_coef));
        }
        if (st.weight != 0.0) {
            if (!distill || !(*distill)[i]) throw ContractError("missing transfer term for weighted step");
            const DistillTarget* d = (*distill)[i];
            accumulate(g.scale(transfer::policy_distillation_loss(g, d->source, pv, &d->points),
                               st.weight));
        }
    }
    nn::Var loss = g.scale(total, 1.0 / static_cast<double>(idx.size()));
    const double value = g.scalar_val(loss);
    g.backward(loss);
    return value;
}

/// Single-worker PPO with the same episode bookkeeping and option-module
/// integration as the A3C trainer. The transfer weight of each step is frozen
/// at collection time and reused by every optimization epoch of the batch.
class PpoTrainer {
public:
    PpoTrainer(const envs::EnvironmentSpec& env, const PpoConfig& cfg, std::uint64_t seed,
               options::OptionModule* option_module, transfer::TransferSchedule& schedule,
               EpisodeSink sink)
        : env_(env),
          cfg_(cfg),
          seed_(seed),
          schedule_(schedule),
          sink_(std::move(sink)),
          episode_(env),
          opt_rt_(option_module, &schedule),
          rng_act_(make_stream(seed, stream::kAction, 0)),
          rng_env_(make_stream(seed, stream::kEnv, 0)),
          rng_opt_(make_stream(seed, stream::kOption, 0)),
          rng_ppo_(make_stream(seed, stream::kPpo, 0)),
          rng_distill_(make_stream(seed, stream::kDistill, 0)),
          adam_actor_(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8}),
          adam_critic_(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8}) {
        Rng init_rng = make_stream(seed, stream::kInit);
        global_.init(envs::observation_width(env), envs::action_space(env), init_rng);
    }

    void run() {
        obs_ = episode_.reset(rng_env_);
        opt_rt_.on_reset(obs_, rng_opt_);
        tracker_.begin(opt_rt_.n_options(), opt_rt_.epsilon(), cfg_.track_recent_obs);
        std::vector<RolloutStep> batch;
        batch.reserve(static_cast<std::size_t>(cfg_.horizon));
        int since_option_update = 0;
        while (episodes_done_ < cfg_.episode_budget) {
            batch.clear();
            while (static_cast<int>(batch.size()) < cfg_.horizon &&
                   episodes_done_ < cfg_.episode_budget) {
                RolloutStep st = collect_step();
                batch.push_back(std::move(st));
                if (++since_option_update >= cfg_.option_update_every) {
                    opt_rt_.flush_updates(rng_opt_);
                    since_option_update = 0;
                }
            }
            if (!batch.empty()) update(batch);
        }
    }

    ActorCritic& global() { return global_; }
    const RecentObservations& recent_observations() const { return recent_obs_; }

private:
    RolloutStep collect_step() {
        const int option = opt_rt_.current();
        const double weight = opt_rt_.weight_at(obs_);
        PolicyOutput pol = global_.policy(obs_);
        Action a = sample_action(pol, rng_act_);
        envs::StepOutcome out = episode_.step(a);
        schedule_.advance();
        const bool switched = opt_rt_.after_step(obs_, a, out, rng_opt_);
        tracker_.on_step(obs_, out, cfg_.gamma, option, weight, switched);

        RolloutStep st;
        st.s = obs_;
        st.a = a;
        st.reward = out.reward;
        st.s2 = out.observation;
        st.done = out.done;
        st.option = option;
        st.weight = weight;
        st.value = global_.value(st.s);
        obs_ = out.observation;
        if (out.done) {
            const long long ep = ++episodes_done_;
            if (sink_) sink_(tracker_.finish(ep, schedule_.steps()));
            if (cfg_.track_recent_obs) recent_obs_.add_episode(std::move(tracker_.obs_log));
            opt_rt_.note_episode_end();
            obs_ = episode_.reset(rng_env_);
            opt_rt_.on_reset(obs_, rng_opt_);
            tracker_.begin(opt_rt_.n_options(), opt_rt_.epsilon(), cfg_.track_recent_obs);
        }
        return st;
    }

    void update(std::vector<RolloutStep>& batch) {
        // Bootstrapped returns across episode segments within the batch.
        std::vector<double> returns(batch.size());
        double carry = batch.back().done ? 0.0 : global_.value(batch.back().s2);
        for (std::size_t i = batch.size(); i-- > 0;) {
            if (batch[i].done) carry = 0.0;  // segment boundary inside the batch
            carry = batch[i].reward + cfg_.gamma * carry;
            returns[i] = carry;
        }
        std::vector<double> advantages(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) advantages[i] = returns[i] - batch[i].value;

        // Old log-probs through the same taped path the updates use, so the
        // very first minibatch sees ratios of exactly 1.
        {
            nn::Graph g;
            for (RolloutStep& st : batch) {
                PolicyVars pv = actor_eval(g, global_.actor_spec, global_.actor, global_.space, st.s);
                st.old_logp = g.scalar_val(action_log_prob(g, pv, global_.space, st.a));
            }
        }
        std::vector<DistillTarget> targets;
        std::vector<const DistillTarget*> target_ptrs(batch.size(), nullptr);
        targets.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (batch[i].weight == 0.0) continue;
            DistillTarget d;
            d.source = opt_rt_.module()->source(batch[i].option).eval(batch[i].s);
            if (!d.source.space.discrete)
                d.points = transfer::distillation_actions(d.source, rng_distill_);
            targets.push_back(std::move(d));
            target_ptrs[i] = &targets.back();
        }

        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng_ppo_);
            for (std::size_t off = 0; off < order.size(); off += cfg_.minibatch) {
                const std::size_t end = std::min(order.size(), off + cfg_.minibatch);
                std::vector<std::size_t> idx(order.begin() + off, order.begin() + end);
                const double loss = ppo_loss(global_, batch, returns, advantages, idx, cfg_,
                                             &target_ptrs);
                if (!std::isfinite(loss)) throw ConfigError("ppo: non-finite loss, aborting run");
                adam_actor_.step(global_.actor);
                adam_critic_.step(global_.critic);
            }
        }
    }

    const envs::EnvironmentSpec& env_;
    PpoConfig cfg_;
    std::uint64_t seed_;
    transfer::TransferSchedule& schedule_;
    EpisodeSink sink_;
    envs::Episode episode_;
    OptionRuntime opt_rt_;
    Rng rng_act_, rng_env_, rng_opt_, rng_ppo_, rng_distill_;
    ActorCritic global_;
    nn::AdamState adam_actor_;
    nn::AdamState adam_critic_;
    Tensor obs_;
    EpisodeTracker tracker_;
    long long episodes_done_ = 0;
    RecentObservations recent_obs_;
};

}  // namespace ptf::agents
