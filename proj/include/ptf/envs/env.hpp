#pragma once

#include <variant>

#include "ptf/envs/gridworld.hpp"
#include "ptf/envs/pinball.hpp"

namespace ptf::envs {

using EnvironmentSpec = std::variant<GridWorldSpec, PinballSpec>;

// Dispatches on the first directive: "grid ..." or any pinball line.
inline EnvironmentSpec parse_env_config(const std::string& text) {
    std::istringstream in(text);
    std::string line, first;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        if (ls >> first && first[0] != '#') break;
        first.clear();
    }
    if (first == "grid") return parse_grid_config(text);
    if (first == "polygon" || first == "ball" || first == "start" || first == "target" ||
        first == "drag" || first == "max_steps" || first == "reward_scale")
        return parse_pinball_config(text);
    throw ParseError("line 1: unrecognized environment format");
}

inline int observation_width(const EnvironmentSpec& spec) {
    return std::holds_alternative<GridWorldSpec>(spec) ? kGridObsWidth : 4;
}

inline ActionSpace action_space(const EnvironmentSpec& spec) {
    return std::holds_alternative<GridWorldSpec>(spec) ? ActionSpace{true, 4}
                                                       : ActionSpace{false, 2};
}

/// Mutable episode state over an immutable spec. reset() draws the start
/// (grid worlds with several start cells) from the caller's stream; step()
/// is a pure function of (spec, state, action).
class Episode {
public:
    explicit Episode(const EnvironmentSpec& spec) : spec_(&spec) {
        if (auto* g = std::get_if<GridWorldSpec>(spec_)) start_cells_ = g->start_cells();
    }

    Tensor reset(Rng& rng) {
        steps_ = 0;
        done_ = false;
        if (auto* g = std::get_if<GridWorldSpec>(spec_)) {
            if (start_cells_.empty()) throw ConfigError("grid world has no start cells");
            std::uniform_int_distribution<std::size_t> pick(0, start_cells_.size() - 1);
            cell_ = start_cells_[pick(rng)];
            return grid_observe(*g, cell_);
        }
        const auto& p = std::get<PinballSpec>(*spec_);
        ball_ = PinballState{p.start[0], p.start[1], 0.0, 0.0};
        return pinball_observe(p, ball_);
    }

    StepOutcome step(const Action& a) {
        if (done_) throw ContractError("step() on a finished episode");
        StepOutcome out;
        if (auto* g = std::get_if<GridWorldSpec>(spec_)) {
            out = grid_step(*g, cell_, a.index, steps_);
        } else {
            const auto& p = std::get<PinballSpec>(*spec_);
            out = pinball_step(p, ball_, a.vec[0], a.vec[1], steps_);
        }
        steps_ = out.step;
        done_ = out.done;
        return out;
    }

    bool done() const { return done_; }
    int steps() const { return steps_; }
    const EnvironmentSpec& spec() const { return *spec_; }
    const GridCell& cell() const { return cell_; }
    const PinballState& ball() const { return ball_; }

private:
    const EnvironmentSpec* spec_;
    std::vector<GridCell> start_cells_;
    GridCell cell_{};
    PinballState ball_{};
    int steps_ = 0;
    bool done_ = true;
};

}  // namespace ptf::envs
