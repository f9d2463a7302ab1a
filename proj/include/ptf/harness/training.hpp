#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include "ptf/agents/ppo.hpp"
#include "ptf/harness/config.hpp"
#include "ptf/harness/metrics.hpp"

namespace ptf::harness {

struct EvalResult {
    double mean = 0.0;
    double stddev = 0.0;
    double success_rate = 0.0;
    int episodes = 0;
};

// Greedy (mode/argmax) rollouts, no learning; mean and sample stddev of the
// discounted return.
inline EvalResult evaluate_policy(const agents::SourcePolicy& policy,
                                  const envs::EnvironmentSpec& env, int episodes, double gamma,
                                  std::uint64_t seed) {
    if (episodes <= 0) throw ContractError("evaluate_policy needs at least one episode");
    if (policy.obs_width() != envs::observation_width(env))
        throw ConfigError("policy observation width does not match the environment");
    if (!(policy.space() == envs::action_space(env)))
        throw ConfigError("policy action space does not match the environment");
    Rng rng = make_stream(seed, stream::kEval);
    envs::Episode ep(env);
    double sum = 0.0, sum_sq = 0.0;
    int successes = 0;
    for (int k = 0; k < episodes; ++k) {
        Tensor obs = ep.reset(rng);
        double disc = 0.0, gpow = 1.0, last_raw = 0.0;
        while (!ep.done()) {
            const envs::StepOutcome out = ep.step(agents::greedy_action(policy.eval(obs)));
            disc += gpow * out.reward;
            gpow *= gamma;
            obs = out.observation;
            last_raw = out.raw_reward;
        }
        sum += disc;
        sum_sq += disc * disc;
        if (last_raw > 0.0) ++successes;
    }
    EvalResult r;
    r.episodes = episodes;
    r.mean = sum / episodes;
    r.stddev = episodes > 1
                   ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / episodes) / (episodes - 1)))
                   : 0.0;
    r.success_rate = static_cast<double>(successes) / episodes;
    return r;
}

namespace detail {

inline std::string transfer_tag(const ExperimentConfig& cfg) {
    switch (cfg.transfer_mode) {
        case transfer::Mode::Off: return "off";
        case transfer::Mode::Adaptive: return "adaptive";
        case transfer::Mode::Fixed: return "fixed" + format_double(cfg.fixed_weight);
    }
    return "?";
}

inline std::string run_tag(const ExperimentConfig& cfg) {
    std::string tag = algorithm_name(cfg.algorithm);
    if (cfg.is_ptf()) tag += "_" + transfer_tag(cfg);
    return tag;
}

inline agents::SourcePolicy snapshot_policy(const agents::ActorCritic& ac) {
    return agents::SourcePolicy(ac.actor_spec, ac.actor, ac.space);
}

inline std::vector<agents::SourcePolicy> load_sources(const ExperimentConfig& cfg,
                                                      const envs::EnvironmentSpec& env) {
    std::vector<agents::SourcePolicy> sources;
    for (const std::string& p : load_manifest(cfg.sources_manifest)) {
        agents::SourcePolicy sp = load_policy(p);
        if (sp.obs_width() != envs::observation_width(env) ||
            !(sp.space() == envs::action_space(env)))
            throw ConfigError("source policy " + p + " does not match the environment");
        sources.push_back(std::move(sp));
    }
    return sources;
}

inline options::OptionConfig option_config(const ExperimentConfig& cfg) {
    options::OptionConfig oc;
    oc.gamma = cfg.gamma;
    oc.option_lr = cfg.option_lr;
    oc.beta_lr = cfg.option_lr;
    oc.xi = cfg.xi;
    oc.batch_size = cfg.batch_size;
    oc.replay_capacity = static_cast<std::size_t>(cfg.replay_capacity);
    oc.target_sync_episodes = cfg.target_sync_episodes;
    oc.epsilon = {cfg.epsilon_start, cfg.epsilon_end, cfg.epsilon_decrement};
    return oc;
}

// Fraction of recently visited states whose greedy option is each o.
inline std::string greedy_fraction_summary(options::OptionModule& module,
                                           const agents::RecentObservations& recent) {
    const auto states = recent.all();
    std::vector<long long> counts(static_cast<std::size_t>(module.n_options()), 0);
    for (const Tensor* s : states) ++counts[static_cast<std::size_t>(module.q_values(*s).argmax())];
    std::string out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i) out += ';';
        const double f = states.empty() ? 0.0 : static_cast<double>(counts[i]) / states.size();
        out += format_double(f);
    }
    return out;
}

}  // namespace detail

struct RunResult {
    std::string metrics_path;
    std::string policy_path;
};

// One full training run for one seed; deterministic given (config, seed).
inline RunResult run_training_single_seed(const ExperimentConfig& cfg,
                                          const envs::EnvironmentSpec& env, std::uint64_t seed,
                                          const std::string& out_dir) {
    const std::string tag = detail::run_tag(cfg);
    const std::string metrics_path =
        out_dir + "/metrics_" + tag + "_seed" + std::to_string(seed) + ".csv";
    const std::string policy_path =
        out_dir + "/policy_" + tag + "_seed" + std::to_string(seed) + ".ptfpol";

    std::string header = cfg.echo();
    header += "# seed = " + std::to_string(seed) + "\n";
    MetricsWriter metrics(metrics_path, header);
    auto sink = [&](const agents::EpisodeStats& st) { metrics.add(seed, st); };

    std::optional<options::OptionModule> option_module;
    if (cfg.is_ptf()) {
        Rng option_init = make_stream(seed, stream::kInit, 1);
        option_module.emplace(detail::load_sources(cfg, env), envs::observation_width(env),
                              detail::option_config(cfg), option_init);
    }
    transfer::TransferSchedule schedule(cfg.transfer_mode, cfg.fixed_weight);
    options::OptionModule* om = option_module ? &*option_module : nullptr;

    try {
        if (cfg.is_ppo()) {
            agents::PpoConfig pc;
            pc.gamma = cfg.gamma;
            pc.learning_rate = cfg.learning_rate;
            pc.clip_ratio = cfg.clip_ratio;
            pc.entropy_coef = cfg.entropy_coef;
            pc.epochs = cfg.ppo_epochs;
            pc.minibatch = cfg.ppo_minibatch;
            pc.horizon = cfg.ppo_horizon;
            pc.option_update_every = cfg.t_max;
            pc.episode_budget = cfg.episodes;
            pc.track_recent_obs = cfg.is_ptf();
            agents::PpoTrainer trainer(env, pc, seed, om, schedule, sink);
            trainer.run();
            if (om)
                metrics.add_summary("greedy_fraction",
                                    detail::greedy_fraction_summary(*om, trainer.recent_observations()));
            save_policy(policy_path, trainer.global().actor_spec, trainer.global().actor,
                        trainer.global().space);
        } else {
            agents::A3cConfig ac;
            ac.gamma = cfg.gamma;
            ac.learning_rate = cfg.learning_rate;
            ac.entropy_coef = cfg.entropy_coef;
            ac.t_max = cfg.t_max;
            ac.workers = cfg.workers;
            ac.deterministic = cfg.deterministic;
            ac.episode_budget = cfg.episodes;
            ac.track_recent_obs = cfg.is_ptf();
            agents::A3cTrainer trainer(env, ac, seed, om, schedule, sink);
            trainer.run();
            if (om)
                metrics.add_summary("greedy_fraction",
                                    detail::greedy_fraction_summary(*om, trainer.recent_observations()));
            save_policy(policy_path, trainer.global().actor_spec, trainer.global().actor,
                        trainer.global().space);
        }
    } catch (const std::exception& e) {
        metrics.add_summary("aborted", e.what());
        metrics.finalize();
        throw;
    }
    metrics.finalize();
    return {metrics_path, policy_path};
}

inline std::vector<RunResult> run_training(ExperimentConfig cfg, const std::string& out_dir) {
    std::ifstream env_in(cfg.env_path);
    if (!env_in) throw ConfigError("cannot open environment file: " + cfg.env_path);
    std::stringstream buf;
    buf << env_in.rdbuf();
    const envs::EnvironmentSpec env = envs::parse_env_config(buf.str());
    cfg.resolve(std::holds_alternative<envs::GridWorldSpec>(env));
    std::filesystem::create_directories(out_dir);
    std::vector<RunResult> results;
    for (std::uint64_t seed : cfg.seeds)
        results.push_back(run_training_single_seed(cfg, env, seed, out_dir));
    return results;
}

struct SourceTrainResult {
    std::string policy_path;
    long long episodes_trained = 0;
    double achieved = 0.0;  // mean discounted return at freeze time
    double ratio = 0.0;     // achieved / optimal (grid) or success rate (pinball)
    bool passed = false;
};

// Trains one vanilla A3C policy per source environment, freezing each when it
// clears the threshold: >= source_threshold of the BFS-optimal discounted
// return for grids, or that success rate for pinball. The imperfect rate
// deliberately freezes earlier, at the given greedy success rate. Exhausting
// the budget saves the policy anyway, with a .warn tag next to it.
inline std::vector<SourceTrainResult> train_source_policies(
    ExperimentConfig cfg, const std::string& out_dir,
    std::optional<double> imperfect_rate = std::nullopt) {
    if (cfg.source_env_paths.empty())
        throw ConfigError("train-sources needs 'source_envs = <file>,<file>,...'");
    std::filesystem::create_directories(out_dir);
    std::vector<SourceTrainResult> results;
    std::string manifest;
    for (std::size_t i = 0; i < cfg.source_env_paths.size(); ++i) {
        const std::string& env_path = cfg.source_env_paths[i];
        std::ifstream env_in(env_path);
        if (!env_in) throw ConfigError("cannot open environment file: " + env_path);
        std::stringstream buf;
        buf << env_in.rdbuf();
        const envs::EnvironmentSpec env = envs::parse_env_config(buf.str());
        ExperimentConfig local = cfg;
        local.algorithm = Algorithm::A3c;
        local.transfer_mode = transfer::Mode::Off;
        local.transfer_set = true;
        local.resolve(std::holds_alternative<envs::GridWorldSpec>(env));

        const bool grid = std::holds_alternative<envs::GridWorldSpec>(env);
        std::vector<int> dist;
        if (grid) dist = envs::grid_goal_distances(std::get<envs::GridWorldSpec>(env));

        agents::A3cConfig ac;
        ac.gamma = local.gamma;
        ac.learning_rate = local.learning_rate;
        ac.entropy_coef = local.entropy_coef;
        ac.t_max = local.t_max;
        ac.workers = local.workers;
        ac.deterministic = local.deterministic;
        ac.episode_budget = local.source_budget;
        transfer::TransferSchedule schedule(transfer::Mode::Off);
        agents::A3cTrainer trainer(env, ac, local.seeds[0], nullptr, schedule, {});

        // Greedy evaluation with a per-start optimal baseline on grids.
        auto evaluate = [&](std::uint64_t eval_round) {
            Rng rng = make_stream(local.seeds[0], stream::kEval, eval_round);
            envs::Episode ep(env);
            const agents::SourcePolicy pol = detail::snapshot_policy(trainer.global());
            double achieved = 0.0, optimal = 0.0;
            int successes = 0;
            for (int k = 0; k < local.eval_episodes; ++k) {
                Tensor obs = ep.reset(rng);
                if (grid)
                    optimal += envs::grid_optimal_return(std::get<envs::GridWorldSpec>(env), dist,
                                                         ep.cell(), local.gamma);
                double disc = 0.0, gpow = 1.0, last_raw = 0.0;
                while (!ep.done()) {
                    const envs::StepOutcome out = ep.step(agents::greedy_action(pol.eval(obs)));
                    disc += gpow * out.reward;
                    gpow *= local.gamma;
                    obs = out.observation;
                    last_raw = out.raw_reward;
                }
                achieved += disc;
                if (last_raw > 0.0) ++successes;
            }
            const double success = static_cast<double>(successes) / local.eval_episodes;
            const double ratio = grid ? (optimal > 0.0 ? achieved / optimal : 0.0) : success;
            return std::make_tuple(achieved / local.eval_episodes, ratio, success);
        };

        SourceTrainResult res;
        std::uint64_t eval_round = 0;
        while (trainer.episodes_done() < local.source_budget) {
            trainer.run_until(trainer.episodes_done() + local.eval_interval);
            auto [achieved, ratio, success] = evaluate(eval_round++);
            res.achieved = achieved;
            res.ratio = ratio;
            res.episodes_trained = trainer.episodes_done();
            if (imperfect_rate ? success >= *imperfect_rate : ratio >= local.source_threshold) {
                res.passed = true;
                break;
            }
        }
        const std::string name = "source" + std::to_string(i) + ".ptfpol";
        res.policy_path = out_dir + "/" + name;
        save_policy(res.policy_path, trainer.global().actor_spec, trainer.global().actor,
                    trainer.global().space);
        if (!res.passed) {
            atomic_write(res.policy_path + ".warn",
                         "below-threshold source policy: ratio " + format_double(res.ratio) +
                             " after " + std::to_string(res.episodes_trained) + " episodes\n");
            std::cerr << "warning: source " << i << " (" << env_path
                      << ") froze below threshold (ratio " << res.ratio << ")\n";
        }
        manifest += name + "\n";
        results.push_back(res);
    }
    atomic_write(out_dir + "/manifest.txt", manifest);
    std::string summary = "index,env,episodes,achieved,ratio,passed\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        summary += std::to_string(i) + "," + cfg.source_env_paths[i] + "," +
                   std::to_string(results[i].episodes_trained) + "," +
                   format_double(results[i].achieved) + "," + format_double(results[i].ratio) +
                   "," + (results[i].passed ? "1" : "0") + "\n";
    }
    atomic_write(out_dir + "/sources_summary.csv", summary);
    return results;
}

}  // namespace ptf::harness
