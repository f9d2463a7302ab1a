#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ptf/transfer/transfer.hpp"

namespace ptf::harness {

enum class Algorithm { A3c, Ppo, PtfA3c, PtfPpo };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::A3c: return "a3c";
        case Algorithm::Ppo: return "ppo";
        case Algorithm::PtfA3c: return "ptf-a3c";
        case Algorithm::PtfPpo: return "ptf-ppo";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "a3c") return Algorithm::A3c;
    if (s == "ppo") return Algorithm::Ppo;
    if (s == "ptf-a3c") return Algorithm::PtfA3c;
    if (s == "ptf-ppo") return Algorithm::PtfPpo;
    throw ParseError("unknown algorithm '" + s + "' (a3c|ppo|ptf-a3c|ptf-ppo)");
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

/// Line-oriented "key = value" experiment configuration. Unknown keys are
/// errors so typos fail loudly. Defaults are the paper's hyperparameter
/// tables; -1 marks values resolved later from the environment or algorithm.
struct ExperimentConfig {
    std::string env_path;
    std::vector<std::string> source_env_paths;  // train-sources only
    Algorithm algorithm = Algorithm::A3c;
    std::string sources_manifest;
    transfer::Mode transfer_mode = transfer::Mode::Off;
    bool transfer_set = false;
    double fixed_weight = 0.5;
    std::vector<std::uint64_t> seeds{1};
    long long episodes = -1;  // default: grid 5000, pinball 2000
    int workers = 8;
    bool deterministic = true;
    double gamma = 0.99;
    double learning_rate = 3e-4;
    double option_lr = 1e-3;
    double entropy_coef = -1.0;  // default: 1e-4 for a3c, 0.005 for ppo
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decrement = 1e-3;
    int batch_size = 32;
    double xi = 1e-3;
    long long target_sync_episodes = 1000;
    int t_max = 20;
    double clip_ratio = 0.2;
    int ppo_epochs = 4;
    int ppo_minibatch = 32;
    int ppo_horizon = 128;
    long long replay_capacity = 100000;
    int eval_episodes = 20;
    int eval_interval = 50;
    double source_threshold = 0.9;
    long long source_budget = -1;  // default: same as episodes

    bool is_ptf() const {
        return algorithm == Algorithm::PtfA3c || algorithm == Algorithm::PtfPpo;
    }
    bool is_ppo() const {
        return algorithm == Algorithm::Ppo || algorithm == Algorithm::PtfPpo;
    }

    void set_transfer(const std::string& s) {
        if (s == "off") {
            transfer_mode = transfer::Mode::Off;
        } else if (s == "adaptive") {
            transfer_mode = transfer::Mode::Adaptive;
        } else if (s.rfind("fixed:", 0) == 0) {
            transfer_mode = transfer::Mode::Fixed;
            try {
                fixed_weight = std::stod(s.substr(6));
            } catch (const std::exception&) {
                throw ParseError("bad fixed transfer weight in '" + s + "'");
            }
        } else {
            throw ParseError("unknown transfer mode '" + s + "' (off|fixed:<w>|adaptive)");
        }
        transfer_set = true;
    }

    std::string transfer_name() const {
        switch (transfer_mode) {
            case transfer::Mode::Off: return "off";
            case transfer::Mode::Adaptive: return "adaptive";
            case transfer::Mode::Fixed: return "fixed:" + format_double(fixed_weight);
        }
        return "?";
    }

    // Fills the auto defaults and checks cross-field invariants.
    void resolve(bool grid_env) {
        if (!transfer_set) transfer_mode = is_ptf() ? transfer::Mode::Adaptive : transfer::Mode::Off;
        if (episodes < 0) episodes = grid_env ? 5000 : 2000;
        if (entropy_coef < 0) entropy_coef = is_ppo() ? 0.005 : 1e-4;
        if (source_budget < 0) source_budget = episodes;
        if (seeds.empty()) throw ConfigError("config needs at least one seed");
        if (is_ptf() && sources_manifest.empty())
            throw ConfigError("ptf algorithms require 'sources = <manifest>'");
        if (workers < 1) throw ConfigError("workers must be >= 1");
        if (episodes <= 0) throw ConfigError("episodes must be positive");
    }

    static ExperimentConfig parse(const std::string& text) {
        ExperimentConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                const auto b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            const std::string where = "line " + std::to_string(lineno) + ": ";
            try {
                apply(cfg, key, val);
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception&) {
                throw ParseError(where + "bad value '" + val + "' for key '" + key + "'");
            }
        }
        return cfg;
    }

    // Loads a config file; relative env/manifest paths resolve against the
    // config file's directory.
    static ExperimentConfig load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open config: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        ExperimentConfig cfg = parse(buf.str());
        const std::filesystem::path base = std::filesystem::path(path).parent_path();
        auto resolve_path = [&](std::string& p) {
            if (p.empty()) return;
            std::filesystem::path fp = p;
            if (fp.is_relative()) p = (base / fp).string();
        };
        resolve_path(cfg.env_path);
        resolve_path(cfg.sources_manifest);
        for (auto& p : cfg.source_env_paths) resolve_path(p);
        return cfg;
    }

    // Full resolved configuration, one "# key = value" line each, sorted.
    std::string echo() const {
        std::map<std::string, std::string> kv;
        kv["algorithm"] = algorithm_name(algorithm);
        kv["batch_size"] = std::to_string(batch_size);
        kv["clip_ratio"] = format_double(clip_ratio);
        kv["deterministic"] = deterministic ? "true" : "false";
        kv["entropy_coef"] = format_double(entropy_coef);
        kv["env"] = env_path;
        kv["episodes"] = std::to_string(episodes);
        kv["epsilon_decrement"] = format_double(epsilon_decrement);
        kv["epsilon_end"] = format_double(epsilon_end);
        kv["epsilon_start"] = format_double(epsilon_start);
        kv["eval_episodes"] = std::to_string(eval_episodes);
        kv["eval_interval"] = std::to_string(eval_interval);
        kv["gamma"] = format_double(gamma);
        kv["learning_rate"] = format_double(learning_rate);
        kv["option_lr"] = format_double(option_lr);
        kv["ppo_epochs"] = std::to_string(ppo_epochs);
        kv["ppo_horizon"] = std::to_string(ppo_horizon);
        kv["ppo_minibatch"] = std::to_string(ppo_minibatch);
        kv["replay_capacity"] = std::to_string(replay_capacity);
        kv["source_budget"] = std::to_string(source_budget);
        kv["source_threshold"] = format_double(source_threshold);
        kv["sources"] = sources_manifest;
        kv["t_max"] = std::to_string(t_max);
        kv["target_sync_episodes"] = std::to_string(target_sync_episodes);
        kv["transfer"] = transfer_name();
        kv["workers"] = std::to_string(workers);
        kv["xi"] = format_double(xi);
        std::string out;
        for (const auto& [k, v] : kv) out += "# " + k + " = " + v + "\n";
        return out;
    }

private:
    static void apply(ExperimentConfig& cfg, const std::string& key, const std::string& val) {
        if (key == "env") {
            cfg.env_path = val;
        } else if (key == "source_envs") {
            cfg.source_env_paths = split_list(val);
        } else if (key == "algorithm") {
            cfg.algorithm = parse_algorithm(val);
        } else if (key == "sources") {
            cfg.sources_manifest = val;
        } else if (key == "transfer") {
            cfg.set_transfer(val);
        } else if (key == "seeds") {
            cfg.seeds.clear();
            for (const std::string& s : split_list(val)) cfg.seeds.push_back(std::stoull(s));
        } else if (key == "episodes") {
            cfg.episodes = std::stoll(val);
        } else if (key == "workers") {
            cfg.workers = std::stoi(val);
        } else if (key == "deterministic") {
            cfg.deterministic = parse_bool(val);
        } else if (key == "gamma") {
            cfg.gamma = std::stod(val);
        } else if (key == "learning_rate") {
            cfg.learning_rate = std::stod(val);
        } else if (key == "option_lr") {
            cfg.option_lr = std::stod(val);
        } else if (key == "entropy_coef") {
            cfg.entropy_coef = std::stod(val);
        } else if (key == "epsilon_start") {
            cfg.epsilon_start = std::stod(val);
        } else if (key == "epsilon_end") {
            cfg.epsilon_end = std::stod(val);
        } else if (key == "epsilon_decrement") {
            cfg.epsilon_decrement = std::stod(val);
        } else if (key == "batch_size") {
            cfg.batch_size = std::stoi(val);
        } else if (key == "xi") {
            cfg.xi = std::stod(val);
        } else if (key == "target_sync_episodes") {
            cfg.target_sync_episodes = std::stoll(val);
        } else if (key == "t_max") {
            cfg.t_max = std::stoi(val);
        } else if (key == "clip_ratio") {
            cfg.clip_ratio = std::stod(val);
        } else if (key == "ppo_epochs") {
            cfg.ppo_epochs = std::stoi(val);
        } else if (key == "ppo_minibatch") {
            cfg.ppo_minibatch = std::stoi(val);
        } else if (key == "ppo_horizon") {
            cfg.ppo_horizon = std::stoi(val);
        } else if (key == "replay_capacity") {
            cfg.replay_capacity = std::stoll(val);
        } else if (key == "fixed_weight") {
            cfg.fixed_weight = std::stod(val);
        } else if (key == "eval_episodes") {
            cfg.eval_episodes = std::stoi(val);
        } else if (key == "eval_interval") {
            cfg.eval_interval = std::stoi(val);
        } else if (key == "source_threshold") {
            cfg.source_threshold = std::stod(val);
        } else if (key == "source_budget") {
            cfg.source_budget = std::stoll(val);
        } else {
            throw ParseError("unknown config key '" + key + "'");
        }
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, ',')) {
            const auto a = cur.find_first_not_of(" \t");
            if (a == std::string::npos) continue;
            const auto b = cur.find_last_not_of(" \t");
            out.push_back(cur.substr(a, b - a + 1));
        }
        return out;
    }

    static bool parse_bool(const std::string& s) {
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ParseError("expected boolean, got '" + s + "'");
    }
};

}  // namespace ptf::harness
