#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "ptf/agents/rollout.hpp"
#include "ptf/envs/env.hpp"
#include "ptf/options/option_module.hpp"
#include "ptf/transfer/transfer.hpp"

namespace ptf::agents {

struct EpisodeStats {
    long long episode = 0;    // 1-based, in completion order across workers
    long long cum_steps = 0;  // global environment steps at completion
    double discounted_return = 0.0;
    double raw_return = 0.0;
    int length = 0;
    std::vector<long long> option_hist;  // empty for agents without an option module
    int option_switches = 0;
    double mean_weight = 0.0;
    double epsilon = 0.0;
};

using EpisodeSink = std::function<void(const EpisodeStats&)>;

struct EpisodeTracker {
    double discounted = 0.0;
    double raw = 0.0;
    double gamma_pow = 1.0;
    int length = 0;
    std::vector<long long> hist;
    int switches = 0;
    double weight_sum = 0.0;
    double eps_at_start = 0.0;
    std::vector<Tensor> obs_log;

    void begin(int n_options, double eps, bool track_obs) {
        discounted = raw = weight_sum = 0.0;
        gamma_pow = 1.0;
        length = switches = 0;
        eps_at_start = eps;
        hist.assign(static_cast<std::size_t>(n_options), 0);
        obs_log.clear();
        track_ = track_obs;
    }

    void on_step(const Tensor& s, const envs::StepOutcome& out, double gamma, int option,
                 double weight, bool switched) {
        discounted += gamma_pow * out.reward;
        gamma_pow *= gamma;
        raw += out.raw_reward;
        ++length;
        if (option >= 0) {
            ++hist[static_cast<std::size_t>(option)];
            weight_sum += weight;
        }
        if (switched) ++switches;
        if (track_) obs_log.push_back(s);
    }

    EpisodeStats finish(long long episode, long long cum_steps) const {
        EpisodeStats st;
        st.episode = episode;
        st.cum_steps = cum_steps;
        st.discounted_return = discounted;
        st.raw_return = raw;
        st.length = length;
        st.option_hist = hist;
        st.option_switches = switches;
        st.mean_weight = length > 0 ? weight_sum / length : 0.0;
        st.epsilon = eps_at_start;
        return st;
    }

private:
    bool track_ = false;
};

/// Per-worker glue around the option module: tracks the active option,
/// records the transfer weight at action time, draws terminations, and
/// batches the pending termination/value updates to the rollout boundary.
class OptionRuntime {
public:
    OptionRuntime(options::OptionModule* module, transfer::TransferSchedule* schedule)
        : module_(module), schedule_(schedule) {}

    bool active() const { return module_ != nullptr; }
    int current() const { return option_; }

    void on_reset(const Tensor& obs, Rng& rng) {
        if (!module_) return;
        option_ = module_->select_option(obs, module_->epsilon(), rng);
    }

    // f(beta_o, t) for the state we are about to act in.
    double weight_at(const Tensor& s) const {
        if (!module_ || !schedule_) return 0.0;
        const long long t = schedule_->steps();
        if (schedule_->mode() == transfer::Mode::Adaptive)
            return schedule_->weight(t, module_->beta(s, option_));
        return schedule_->weight(t, 0.0);
    }

    // Call after the environment step: replay store, termination draw,
    // possible re-selection. Returns true when the active option changed.
    bool after_step(const Tensor& s, const Action& a, const envs::StepOutcome& out, Rng& rng) {
        if (!module_) return false;
        module_->store_transition({s, a, out.reward, out.observation, out.done});
        pending_.emplace_back(out.observation, option_);
        if (out.done) return false;
        if (!module_->sample_termination(out.observation, option_, rng)) return false;
        const int next = module_->select_option(out.observation, module_->epsilon(), rng);
        const bool switched = next != option_;
        option_ = next;
        return switched;
    }

    // Termination steps for the collected transitions (most recent first,
    // matching the backward sweep of the update loop), then one off-policy
    // option-value batch.
    void flush_updates(Rng& rng) {
        if (!module_) return;
        for (std::size_t i = pending_.size(); i-- > 0;)
            module_->termination_step(pending_[i].first, pending_[i].second);
        pending_.clear();
        module_->update_option_values(rng);
    }

    void note_episode_end() {
        if (module_) module_->note_episode_end();
    }

    double epsilon() const { return module_ ? module_->epsilon() : 0.0; }
    int n_options() const { return module_ ? module_->n_options() : 0; }
    options::OptionModule* module() { return module_; }

private:
    options::OptionModule* module_;
    transfer::TransferSchedule* schedule_;
    int option_ = -1;
    std::vector<std::pair<Tensor, int>> pending_;
};

/// Bounded log of the observations seen in the most recent episodes; feeds
/// the end-of-training option statistics.
class RecentObservations {
public:
    explicit RecentObservations(std::size_t max_episodes = 100) : cap_(max_episodes) {}

    void add_episode(std::vector<Tensor> obs) {
        episodes_.push_back(std::move(obs));
        if (episodes_.size() > cap_) episodes_.pop_front();
    }

    std::vector<const Tensor*> all() const {
        std::vector<const Tensor*> out;
        for (const auto& ep : episodes_)
            for (const auto& o : ep) out.push_back(&o);
        return out;
    }

private:
    std::size_t cap_;
    std::deque<std::vector<Tensor>> episodes_;
};

}  // namespace ptf::agents
