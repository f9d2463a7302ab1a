#pragma once

#include <vector>

#include "ptf/agents/policy.hpp"

namespace ptf::agents {

struct RolloutStep {
    Tensor s;
    Action a;
    double reward = 0.0;
    Tensor s2;
    bool done = false;
    int option = -1;       // active option at this step (-1 when transfer is off)
    double weight = 0.0;   // f(beta_o, t) recorded at action time
    double old_logp = 0.0; // PPO: log pi(a|s) under the collecting policy
    double value = 0.0;    // PPO: V(s) under the collecting critic
};

struct Rollout {
    std::vector<RolloutStep> steps;
    double bootstrap = 0.0;  // V(s_last); 0 when the final state is terminal

    bool empty() const { return steps.empty(); }
    std::size_t size() const { return steps.size(); }
};

// Backward recursion R = r_i + gamma * R seeded with the bootstrap value.
inline std::vector<double> compute_returns(const Rollout& rollout, double gamma) {
    if (rollout.empty()) throw ContractError("compute_returns on empty rollout");
    std::vector<double> returns(rollout.size());
    double r = rollout.steps.back().done ? 0.0 : rollout.bootstrap;
    for (std::size_t i = rollout.size(); i-- > 0;) {
        r = rollout.steps[i].reward + gamma * r;
        returns[i] = r;
    }
    return returns;
}

}  // namespace ptf::agents
