#pragma once

#include <deque>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ptf/envs/types.hpp"

namespace ptf::envs {

struct GridCell {
    int x = 0;
    int y = 0;
    bool operator==(const GridCell& o) const { return x == o.x && y == o.y; }
};

// Action indices follow the task description order: up, down, left, right.
enum GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridWorldSpec {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> walls;  // row-major, height*width
    GridCell goal{-1, -1};
    std::vector<GridCell> starts;  // empty = every free non-goal cell
    int max_steps = 500;
    double goal_reward = 5.0;

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    // Off-grid counts as wall.
    bool wall(int x, int y) const {
        return !in_bounds(x, y) || walls[static_cast<std::size_t>(y) * width + x] != 0;
    }

    void validate() const {
        if (width <= 0 || height <= 0) throw ConfigError("grid dimensions must be positive");
        if (walls.size() != static_cast<std::size_t>(width) * height)
            throw ConfigError("grid wall mask size does not match width*height");
        if (!in_bounds(goal.x, goal.y)) throw ConfigError("grid goal out of bounds");
        if (wall(goal.x, goal.y)) throw ConfigError("grid goal placed inside a wall");
        for (const GridCell& s : starts) {
            if (!in_bounds(s.x, s.y)) throw ConfigError("grid start out of bounds");
            if (wall(s.x, s.y)) throw ConfigError("grid start placed inside a wall");
        }
        if (max_steps <= 0) throw ConfigError("grid max_steps must be positive");
    }

    std::vector<GridCell> start_cells() const {
        if (!starts.empty()) return starts;
        std::vector<GridCell> cells;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (!wall(x, y) && !(goal.x == x && goal.y == y)) cells.push_back({x, y});
        return cells;
    }
};

inline constexpr int kGridObsWidth = 10;

// (x, y) normalized to [0,1] plus the eight surrounding cells' wall flags in
// row order: NW N NE, W E, SW S SE.
inline Tensor grid_observe(const GridWorldSpec& spec, GridCell cell) {
    if (!spec.in_bounds(cell.x, cell.y)) throw ContractError("grid_observe: cell out of bounds");
    Tensor obs({kGridObsWidth});
    obs[0] = spec.width > 1 ? static_cast<double>(cell.x) / (spec.width - 1) : 0.0;
    obs[1] = spec.height > 1 ? static_cast<double>(cell.y) / (spec.height - 1) : 0.0;
    static constexpr int kOffsets[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                           {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
    for (int k = 0; k < 8; ++k)
        obs[2 + k] = spec.wall(cell.x + kOffsets[k][0], cell.y + kOffsets[k][1]) ? 1.0 : 0.0;
    return obs;
}

// One move; blocked moves (walls, off-grid) leave the cell unchanged. Only
// reaching the goal pays out. `steps_taken` counts completed steps before
// this one.
inline StepOutcome grid_step(const GridWorldSpec& spec, GridCell& cell, int action,
                             int steps_taken) {
    if (!spec.in_bounds(cell.x, cell.y) || spec.wall(cell.x, cell.y))
        throw ContractError("grid_step: current cell invalid");
    if (action < 0 || action > 3) throw ContractError("grid_step: action out of range");
    int nx = cell.x, ny = cell.y;
    switch (action) {
        case kUp: --ny; break;
        case kDown: ++ny; break;
        case kLeft: --nx; break;
        case kRight: ++nx; break;
    }
    if (!spec.wall(nx, ny)) {
        cell.x = nx;
        cell.y = ny;
    }
    StepOutcome out;
    out.step = steps_taken + 1;
    const bool at_goal = cell == spec.goal;
    out.raw_reward = at_goal ? spec.goal_reward : 0.0;
    out.reward = out.raw_reward;
    out.done = at_goal || out.step >= spec.max_steps;
    out.observation = grid_observe(spec, cell);
    return out;
}

// Breadth-first distances to the goal; -1 for unreachable or wall cells.
inline std::vector<int> grid_goal_distances(const GridWorldSpec& spec) {
    std::vector<int> dist(static_cast<std::size_t>(spec.width) * spec.height, -1);
    std::deque<GridCell> frontier;
    dist[static_cast<std::size_t>(spec.goal.y) * spec.width + spec.goal.x] = 0;
    frontier.push_back(spec.goal);
    while (!frontier.empty()) {
        GridCell c = frontier.front();
        frontier.pop_front();
        const int d = dist[static_cast<std::size_t>(c.y) * spec.width + c.x];
        static constexpr int kMoves[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
        for (auto& m : kMoves) {
            const int nx = c.x + m[0], ny = c.y + m[1];
            if (spec.wall(nx, ny)) continue;
            auto& dn = dist[static_cast<std::size_t>(ny) * spec.width + nx];
            if (dn < 0) {
                dn = d + 1;
                frontier.push_back({nx, ny});
            }
        }
    }
    return dist;
}

// Discounted return of a shortest path from `cell`: goal_reward * gamma^(d-1).
inline double grid_optimal_return(const GridWorldSpec& spec, const std::vector<int>& dist,
                                  GridCell cell, double gamma) {
    const int d = dist[static_cast<std::size_t>(cell.y) * spec.width + cell.x];
    if (d <= 0) return 0.0;
    return spec.goal_reward * std::pow(gamma, d - 1);
}

// ASCII map: header "grid <w> <h> max_steps=<n> goal_reward=<r>", then <h>
// rows of '#' wall, '.' free, 'G' goal, 'S' start.
inline GridWorldSpec parse_grid_config(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty grid file");
    std::istringstream header(line);
    std::string tag;
    GridWorldSpec spec;
    header >> tag >> spec.width >> spec.height;
    if (tag != "grid" || header.fail() || spec.width <= 0 || spec.height <= 0)
        throw ParseError("line 1: expected 'grid <width> <height> ...'");
    std::string kv;
    while (header >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("line 1: expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        try {
            if (key == "max_steps")
                spec.max_steps = std::stoi(val);
            else if (key == "goal_reward")
                spec.goal_reward = std::stod(val);
            else
                throw ParseError("line 1: unknown grid option '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError("line 1: bad value for '" + key + "'");
        }
    }
    spec.walls.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);
    int goals = 0;
    for (int y = 0; y < spec.height; ++y) {
        if (!std::getline(in, line))
            throw ParseError("line " + std::to_string(y + 2) + ": expected " +
                             std::to_string(spec.height) + " map rows");
        if (static_cast<int>(line.size()) != spec.width)
            throw ParseError("line " + std::to_string(y + 2) + ": row width " +
                             std::to_string(line.size()) + " != " + std::to_string(spec.width));
        for (int x = 0; x < spec.width; ++x) {
            switch (line[static_cast<std::size_t>(x)]) {
                case '#': spec.walls[static_cast<std::size_t>(y) * spec.width + x] = 1; break;
                case '.': break;
                case 'G':
                    spec.goal = {x, y};
                    ++goals;
                    break;
                case 'S': spec.starts.push_back({x, y}); break;
                default:
                    throw ParseError("line " + std::to_string(y + 2) + ": bad cell '" +
                                     line[static_cast<std::size_t>(x)] + "'");
            }
        }
    }
    if (goals != 1) throw ParseError("map must contain exactly one 'G', found " + std::to_string(goals));
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ParseError(std::string("map invariant violated: ") + e.what());
    }
    return spec;
}

}  // namespace ptf::envs
