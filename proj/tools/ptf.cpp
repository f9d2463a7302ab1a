// Command-line front end: train, train-sources, eval, plot.

#include <CLI11.hpp>
#include <iostream>

#include "ptf/harness/curves.hpp"
#include "ptf/harness/training.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Policy-transfer reinforcement learning laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_path, policy_path, env_path, in_dir, transfer_override;
    std::uint64_t seed = 0;
    bool seed_set = false, deterministic = false;
    double gamma = 0.99, imperfect = -1.0;
    int episodes = 100, window = 100;

    auto* train = app.add_subcommand("train", "Train a target-task agent per the config");
    train->add_option("--config", config_path, "experiment config file")->required();
    train->add_option("--seed", seed, "override the config's seed list with one seed")
        ->each([&](const std::string&) { seed_set = true; });
    train->add_flag("--deterministic", deterministic, "force deterministic mode");
    train->add_option("--transfer", transfer_override, "override transfer mode: off|fixed:<w>|adaptive");
    train->add_option("--out", out_path, "output directory")->required();

    auto* sources = app.add_subcommand("train-sources", "Train and freeze source policies");
    sources->add_option("--config", config_path, "experiment config file")->required();
    sources->add_option("--imperfect", imperfect, "freeze early at this greedy success rate");
    sources->add_option("--out", out_path, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a frozen policy greedily");
    eval->add_option("--policy", policy_path, "policy file")->required();
    eval->add_option("--env", env_path, "environment file")->required();
    eval->add_option("--episodes", episodes, "number of evaluation episodes")->required();
    eval->add_option("--gamma", gamma, "discount factor");
    eval->add_option("--seed", seed, "evaluation seed");

    auto* plot = app.add_subcommand("plot", "Aggregate metrics files into curves + SVG");
    plot->add_option("--in", in_dir, "directory of metrics_*.csv files")->required();
    plot->add_option("--out", out_path, "output file (writes .csv and .svg)")->required();
    plot->add_option("--window", window, "smoothing window in episodes");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) {
        ptf::harness::ExperimentConfig cfg = ptf::harness::ExperimentConfig::load_file(config_path);
        if (seed_set) cfg.seeds = {seed};
        if (deterministic) cfg.deterministic = true;
        if (!transfer_override.empty()) cfg.set_transfer(transfer_override);
        for (const auto& r : ptf::harness::run_training(cfg, out_path))
            std::cout << r.metrics_path << "\n" << r.policy_path << "\n";
        return 0;
    }
    if (sources->parsed()) {
        ptf::harness::ExperimentConfig cfg = ptf::harness::ExperimentConfig::load_file(config_path);
        std::optional<double> rate;
        if (imperfect >= 0.0) rate = imperfect;
        const auto results = ptf::harness::train_source_policies(cfg, out_path, rate);
        for (const auto& r : results)
            std::cout << r.policy_path << " episodes=" << r.episodes_trained
                      << " ratio=" << r.ratio << (r.passed ? "" : " BELOW-THRESHOLD") << "\n";
        std::cout << out_path << "/manifest.txt\n";
        return 0;
    }
    if (eval->parsed()) {
        ptf::agents::SourcePolicy pol = ptf::harness::load_policy(policy_path);
        std::ifstream in(env_path);
        if (!in) throw ptf::ConfigError("cannot open environment file: " + env_path);
        std::stringstream buf;
        buf << in.rdbuf();
        const ptf::envs::EnvironmentSpec env = ptf::envs::parse_env_config(buf.str());
        const auto r = ptf::harness::evaluate_policy(pol, env, episodes, gamma, seed);
        std::cout << "mean=" << ptf::harness::format_double(r.mean)
                  << " stddev=" << ptf::harness::format_double(r.stddev)
                  << " success_rate=" << ptf::harness::format_double(r.success_rate)
                  << " episodes=" << r.episodes << "\n";
        return 0;
    }
    if (plot->parsed()) {
        const auto r = ptf::harness::emit_curves(in_dir, out_path, window);
        std::cout << r.csv_path << "\n" << r.svg_path << "\n";
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ptf::ParseError& e) {
        std::cerr << "error: parse: " << e.what() << "\n";
        return 2;
    } catch (const ptf::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 3;
    } catch (const ptf::ContractError& e) {
        std::cerr << "error: contract: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
