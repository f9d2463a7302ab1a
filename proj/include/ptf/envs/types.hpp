#pragma once

#include "ptf/tensor.hpp"

namespace ptf::envs {

struct ActionSpace {
    bool discrete = true;
    int n = 0;  // number of actions, or dimensionality of the box [-1,1]^n

    bool operator==(const ActionSpace& o) const { return discrete == o.discrete && n == o.n; }
};

/// Discrete actions carry an index; continuous ones a vector in [-1,1]^n.
struct Action {
    int index = -1;
    Tensor vec;

    static Action discrete(int i) { return Action{i, Tensor()}; }
    static Action continuous(Tensor v) { return Action{-1, std::move(v)}; }
};

struct StepOutcome {
    Tensor observation;
    double reward = 0.0;      // post-scaling, what the learner sees
    double raw_reward = 0.0;  // as defined by the task
    bool done = false;
    int step = 0;  // 1-based index of the step just taken
};

}  // namespace ptf::envs
