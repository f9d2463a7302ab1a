#pragma once

#include <mutex>
#include <thread>

#include "ptf/agents/trainer_common.hpp"
#include "ptf/nn/adam.hpp"

namespace ptf::agents {

/// Actor and critic networks with their parameter stores (theta, theta_v).
struct ActorCritic {
    nn::MlpSpec actor_spec;
    nn::MlpSpec critic_spec;
    ActionSpace space;
    nn::ParameterStore actor;
    nn::ParameterStore critic;

    void init(int obs_width, const ActionSpace& sp, Rng& rng) {
        space = sp;
        actor_spec = make_actor_spec(obs_width, sp);
        critic_spec = make_critic_spec(obs_width);
        init_actor_params(actor_spec, sp, actor, rng);
        nn::init_mlp_params(critic_spec, critic, rng);
    }

    PolicyOutput policy(const Tensor& obs) const {
        return actor_eval(actor_spec, actor, space, obs);
    }
    double value(const Tensor& obs) const {
        return nn::mlp_apply(critic_spec, critic, obs)[0][0];
    }

    void copy_values_from(const ActorCritic& o) {
        actor.copy_values_from(o.actor);
        critic.copy_values_from(o.critic);
    }
    void zero_grads() {
        actor.zero_grads();
        critic.zero_grads();
    }
};

/// Frozen distillation target for one rollout step: the source policy output
/// at s_i, plus the sampled evaluation actions for continuous spaces.
struct DistillTarget {
    PolicyOutput source;
    std::vector<Tensor> points;
};

// Accumulates the three-term policy gradient and the value gradient for one
// rollout into the stores of `ac`, as a single scalar loss:
//   sum_i [ -log pi(a_i|s_i) * (R_i - V(s_i)) - rho * H(pi(s_i))
//           + w_i * L_H(pi_o(s_i), pi(s_i)) ]  +  sum_i (R_i - V(s_i))^2
// Advantages are treated as constants. Steps with w_i == 0 contribute no
// distillation node at all, so a disabled transfer term is bit-identical to
// the vanilla loss. Returns the loss value.
inline double a3c_gradients(ActorCritic& ac, const Rollout& rollout,
                            const std::vector<double>& returns, double entropy_coef,
                            const std::vector<const DistillTarget*>* distill = nullptr) {
    if (rollout.size() != returns.size()) throw ContractError("rollout/returns length mismatch");
    if (distill && distill->size() != rollout.size())
        throw ContractError("rollout/transfer-term length mismatch");
    nn::Graph g;
    nn::Var total{};
    auto accumulate = [&](nn::Var v) { total = total.valid() ? g.add(total, v) : v; };
    for (std::size_t i = 0; i < rollout.size(); ++i) {
        const RolloutStep& st = rollout.steps[i];
        PolicyVars pv = actor_eval(g, ac.actor_spec, ac.actor, ac.space, st.s);
        nn::Var v = nn::mlp_apply(g, ac.critic_spec, ac.critic, st.s)[0];
        const double advantage = returns[i] - g.val(v)[0];

        nn::Var logp = action_log_prob(g, pv, ac.space, st.a);
        accumulate(g.scale(logp, -advantage));
        if (entropy_coef != 0.0) {
            nn::Var ent = ac.space.discrete ? nn::entropy_categorical(g, pv.probs)
                                            : nn::entropy_gaussian(g, pv.log_std);
            accumulate(g.scale(ent, -entropy_coef));
        }
        if (st.weight != 0.0) {
            if (!distill || !(*distill)[i]) throw ContractError("missing transfer term for weighted step");
            const DistillTarget* d = (*distill)[i];
            nn::Var lh = transfer::policy_distillation_loss(g, d->source, pv, &d->points);
            accumulate(g.scale(lh, st.weight));
        }
        accumulate(g.square(g.sub(g.constant(Tensor::scalar(returns[i])), g.pick(v, 0))));
    }
    const double loss = g.scalar_val(total);
    g.backward(total);
    return loss;
}

struct A3cConfig {
    double gamma = 0.99;
    double learning_rate = 3e-4;
    double entropy_coef = 1e-4;
    int t_max = 20;
    int workers = 8;
    bool deterministic = true;  // round-robin in one thread of control
    long long episode_budget = 5000;
    bool track_recent_obs = false;
};

/// n-worker advantage actor-critic. Workers act on parameter snapshots and
/// apply their accumulated gradients to the global stores through Adam; in
/// deterministic mode they are stepped round-robin so runs replay exactly.
class A3cTrainer {
public:
    A3cTrainer(const envs::EnvironmentSpec& env, const A3cConfig& cfg, std::uint64_t seed,
               options::OptionModule* option_module, transfer::TransferSchedule& schedule,
               EpisodeSink sink)
        : env_(env),
          cfg_(cfg),
          seed_(seed),
          option_module_(option_module),
          schedule_(schedule),
          sink_(std::move(sink)),
          adam_actor_(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8}),
          adam_critic_(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8}) {
        Rng init_rng = make_stream(seed_, stream::kInit);
        global_.init(envs::observation_width(env_), envs::action_space(env_), init_rng);
        const int n = cfg_.deterministic ? cfg_.workers : std::max(1, cfg_.workers);
        for (int k = 0; k < n; ++k) workers_.push_back(std::make_unique<Worker>(*this, k));
    }

    void run() { run_until(cfg_.episode_budget); }

    // Trains until `target` episodes have completed (capped by the budget);
    // callable repeatedly for eval-interleaved training.
    void run_until(long long target) {
        target = std::min(target, cfg_.episode_budget);
        if (!started_) {
            for (auto& w : workers_) w->start();
            started_ = true;
        }
        if (episodes_done_ >= target) return;
        if (cfg_.deterministic) {
            bool done = false;
            while (!done)
                for (auto& w : workers_) {
                    w->run_segment();
                    if (episodes_done_ >= target) {
                        done = true;
                        break;
                    }
                }
        } else {
            std::vector<std::thread> threads;
            threads.reserve(workers_.size());
            for (auto& w : workers_)
                threads.emplace_back([&w, this, target] {
                    while (episodes_done_ < target) w->run_segment();
                });
            for (auto& t : threads) t.join();
        }
    }

    ActorCritic& global() { return global_; }
    const ActorCritic& global() const { return global_; }
    const RecentObservations& recent_observations() const { return recent_obs_; }
    long long episodes_done() const { return episodes_done_; }

private:
    struct Worker {
        Worker(A3cTrainer& t, int id)
            : owner(t),
              id(id),
              episode(t.env_),
              opt_rt(t.option_module_, &t.schedule_),
              rng_act(make_stream(t.seed_, stream::kAction, static_cast<std::uint64_t>(id))),
              rng_env(make_stream(t.seed_, stream::kEnv, static_cast<std::uint64_t>(id))),
              rng_opt(make_stream(t.seed_, stream::kOption, static_cast<std::uint64_t>(id))),
              rng_distill(make_stream(t.seed_, stream::kDistill, static_cast<std::uint64_t>(id))) {
            Rng snap_init = make_stream(t.seed_, stream::kInit);  // same layout as global
            snapshot.init(envs::observation_width(t.env_), envs::action_space(t.env_), snap_init);
        }

        void start() {
            obs = episode.reset(rng_env);
            opt_rt.on_reset(obs, rng_opt);
            tracker.begin(opt_rt.n_options(), opt_rt.epsilon(), owner.cfg_.track_recent_obs);
        }

        void run_segment() {
            {
                std::lock_guard<std::mutex> lock(owner.global_mu_);
                snapshot.copy_values_from(owner.global_);
            }
            Rollout rollout;
            std::vector<DistillTarget> targets;
            std::vector<const DistillTarget*> target_ptrs;
            bool finished_episode = false;
            for (int i = 0; i < owner.cfg_.t_max; ++i) {
                const int option = opt_rt.current();
                const double weight = opt_rt.weight_at(obs);
                PolicyOutput pol = snapshot.policy(obs);
                Action a = sample_action(pol, rng_act);
                envs::StepOutcome out = episode.step(a);
                owner.schedule_.advance();
                const bool switched = opt_rt.after_step(obs, a, out, rng_opt);
                tracker.on_step(obs, out, owner.cfg_.gamma, option, weight, switched);

                RolloutStep st;
                st.s = obs;
                st.a = a;
                st.reward = out.reward;
                st.s2 = out.observation;
                st.done = out.done;
                st.option = option;
                st.weight = weight;
                rollout.steps.push_back(std::move(st));
                obs = out.observation;
                if (out.done) {
                    finished_episode = true;
                    break;
                }
            }
            rollout.bootstrap = rollout.steps.back().done ? 0.0 : snapshot.value(obs);
            const auto returns = compute_returns(rollout, owner.cfg_.gamma);

            targets.reserve(rollout.size());
            target_ptrs.assign(rollout.size(), nullptr);
            for (std::size_t i = 0; i < rollout.size(); ++i) {
                const RolloutStep& st = rollout.steps[i];
                if (st.weight == 0.0) continue;
                DistillTarget d;
                d.source = opt_rt.module()->source(st.option).eval(st.s);
                if (!d.source.space.discrete)
                    d.points = transfer::distillation_actions(d.source, rng_distill);
                targets.push_back(std::move(d));
                target_ptrs[i] = &targets.back();
            }
            const double loss =
                a3c_gradients(snapshot, rollout, returns, owner.cfg_.entropy_coef, &target_ptrs);
            if (!std::isfinite(loss)) throw ConfigError("a3c: non-finite loss, aborting run");
            {
                std::lock_guard<std::mutex> lock(owner.global_mu_);
                owner.global_.actor.accumulate_grads_from(snapshot.actor);
                owner.global_.critic.accumulate_grads_from(snapshot.critic);
                owner.adam_actor_.step(owner.global_.actor);
                owner.adam_critic_.step(owner.global_.critic);
            }
            snapshot.zero_grads();
            opt_rt.flush_updates(rng_opt);
            if (finished_episode) finish_episode();
        }

        void finish_episode() {
            {
                std::lock_guard<std::mutex> lock(owner.episodes_mu_);
                const long long ep = ++owner.episodes_done_;
                if (ep <= owner.cfg_.episode_budget) {
                    const EpisodeStats stats = tracker.finish(ep, owner.schedule_.steps());
                    if (owner.sink_) owner.sink_(stats);
                    if (owner.cfg_.track_recent_obs)
                        owner.recent_obs_.add_episode(std::move(tracker.obs_log));
                }
            }
            opt_rt.note_episode_end();
            obs = episode.reset(rng_env);
            opt_rt.on_reset(obs, rng_opt);
            tracker.begin(opt_rt.n_options(), opt_rt.epsilon(), owner.cfg_.track_recent_obs);
        }

        A3cTrainer& owner;
        int id;
        envs::Episode episode;
        OptionRuntime opt_rt;
        Rng rng_act, rng_env, rng_opt, rng_distill;
        ActorCritic snapshot;
        Tensor obs;
        EpisodeTracker tracker;
    };

    const envs::EnvironmentSpec& env_;
    A3cConfig cfg_;
    std::uint64_t seed_;
    options::OptionModule* option_module_;
    transfer::TransferSchedule& schedule_;
    EpisodeSink sink_;
    ActorCritic global_;
    nn::AdamState adam_actor_;
    nn::AdamState adam_critic_;
    std::vector<std::unique_ptr<Worker>> workers_;
    bool started_ = false;
    std::atomic<long long> episodes_done_{0};
    RecentObservations recent_obs_;
    std::mutex global_mu_;
    std::mutex episodes_mu_;
};

}  // namespace ptf::agents
