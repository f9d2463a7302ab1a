#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ptf/envs/types.hpp"

namespace ptf::envs {

using Point = std::array<double, 2>;

struct PinballSpec {
    std::vector<std::vector<Point>> polygons;  // obstacle vertex lists, unit square coords
    double ball_radius = 0.02;
    Point start{0.2, 0.9};
    Point target{0.9, 0.2};
    double target_radius = 0.04;
    double drag = 0.995;
    int max_steps = 500;
    double thrust_penalty = -5.0;
    double noop_penalty = -1.0;
    double terminal_reward = 10000.0;
    double reward_scale = 1.0 / 10000.0;

    void validate() const {
        if (!(drag > 0.0 && drag <= 1.0)) throw ConfigError("pinball drag must be in (0,1]");
        if (ball_radius <= 0.0 || target_radius <= 0.0)
            throw ConfigError("pinball radii must be positive");
        if (max_steps <= 0) throw ConfigError("pinball max_steps must be positive");
        for (const auto& poly : polygons)
            if (poly.size() < 3) throw ConfigError("pinball polygon needs at least 3 vertices");
        auto inside_unit = [](const Point& p) {
            return p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0;
        };
        if (!inside_unit(start) || !inside_unit(target))
            throw ConfigError("pinball start/target must lie in the unit square");
        if (point_in_obstacle(start) || point_in_obstacle(target))
            throw ConfigError("pinball start/target must lie outside obstacles");
    }

    bool point_in_obstacle(const Point& p) const {
        for (const auto& poly : polygons) {
            bool in = false;
            for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
                const Point& a = poly[i];
                const Point& b = poly[j];
                if ((a[1] > p[1]) != (b[1] > p[1]) &&
                    p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0])
                    in = !in;
            }
            if (in) return true;
        }
        return false;
    }
};

struct PinballState {
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
};

inline Tensor pinball_observe(const PinballSpec&, const PinballState& s) {
    return Tensor({4}, {s.x, s.y, s.vx, s.vy}, false);
}

namespace detail {

// Closest point on segment ab to p.
inline Point closest_on_segment(const Point& a, const Point& b, const Point& p) {
    const double abx = b[0] - a[0], aby = b[1] - a[1];
    const double len2 = abx * abx + aby * aby;
    if (len2 <= 0.0) return a;
    double t = ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return {a[0] + t * abx, a[1] + t * aby};
}

struct Hit {
    double ex, ey;  // unit edge direction
};

// Collects edges the ball overlaps while moving toward them. The outer walls
// of the unit square participate like obstacle edges.
inline int detect_hits(const PinballSpec& spec, const PinballState& s, Hit* first) {
    int count = 0;
    auto consider = [&](const Point& a, const Point& b) {
        const Point c = closest_on_segment(a, b, {s.x, s.y});
        const double dx = s.x - c[0], dy = s.y - c[1];
        const double d2 = dx * dx + dy * dy;
        if (d2 >= spec.ball_radius * spec.ball_radius || d2 < 1e-24) return;
        if (s.vx * dx + s.vy * dy >= 0.0) return;  // already separating
        if (count == 0) {
            double ex = b[0] - a[0], ey = b[1] - a[1];
            const double len = std::sqrt(ex * ex + ey * ey);
            *first = {ex / len, ey / len};
        }
        ++count;
    };
    for (const auto& poly : spec.polygons)
        for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
            consider(poly[j], poly[i]);
    consider({0.0, 0.0}, {1.0, 0.0});
    consider({1.0, 0.0}, {1.0, 1.0});
    consider({1.0, 1.0}, {0.0, 1.0});
    consider({0.0, 1.0}, {0.0, 0.0});
    return count;
}

}  // namespace detail

// One environment step: velocity impulse, 20 integration sub-steps with
// elastic reflection, then drag. The null action is the exact zero vector.
inline StepOutcome pinball_step(const PinballSpec& spec, PinballState& s, double ax, double ay,
                                int steps_taken) {
    if (std::isnan(ax) || std::isnan(ay)) throw ContractError("pinball_step: NaN action");
    auto clamp1 = [](double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); };
    s.vx = clamp1(s.vx + ax);
    s.vy = clamp1(s.vy + ay);

    StepOutcome out;
    out.step = steps_taken + 1;
    const bool noop = ax == 0.0 && ay == 0.0;
    out.raw_reward = noop ? spec.noop_penalty : spec.thrust_penalty;

    bool reached = false;
    const double h = spec.ball_radius / 20.0;
    for (int sub = 0; sub < 20 && !reached; ++sub) {
        s.x += s.vx * h;
        s.y += s.vy * h;
        detail::Hit hit{};
        const int hits = detail::detect_hits(spec, s, &hit);
        if (hits == 1) {
            // Elastic reflection about the edge direction: the tangential
            // component survives, the normal one flips.
            const double along = s.vx * hit.ex + s.vy * hit.ey;
            s.vx = 2.0 * along * hit.ex - s.vx;
            s.vy = 2.0 * along * hit.ey - s.vy;
        } else if (hits > 1) {
            s.vx = -s.vx;
            s.vy = -s.vy;
        }
        const double tx = s.x - spec.target[0], ty = s.y - spec.target[1];
        reached = tx * tx + ty * ty < spec.target_radius * spec.target_radius;
    }

    if (reached) {
        out.raw_reward = spec.terminal_reward;
        out.done = true;
    } else {
        s.vx *= spec.drag;
        s.vy *= spec.drag;
        out.done = out.step >= spec.max_steps;
    }
    out.reward = out.raw_reward * spec.reward_scale;
    out.observation = pinball_observe(spec, s);
    return out;
}

// Line-oriented config: "polygon x1 y1 x2 y2 ...", "ball radius=<r>",
// "start <x> <y>", "target <x> <y> <radius>", "drag <d>", "max_steps <n>",
// "reward_scale <s>".
inline PinballSpec parse_pinball_config(const std::string& text) {
    PinballSpec spec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_start = false, saw_target = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (tag == "polygon") {
            std::vector<Point> poly;
            double x, y;
            while (ls >> x >> y) poly.push_back({x, y});
            if (poly.size() < 3) throw ParseError(where + "polygon needs at least 3 vertices");
            spec.polygons.push_back(std::move(poly));
        } else if (tag == "ball") {
            std::string kv;
            if (!(ls >> kv) || kv.rfind("radius=", 0) != 0)
                throw ParseError(where + "expected 'ball radius=<r>'");
            spec.ball_radius = std::stod(kv.substr(7));
        } else if (tag == "start") {
            if (!(ls >> spec.start[0] >> spec.start[1]))
                throw ParseError(where + "expected 'start <x> <y>'");
            saw_start = true;
        } else if (tag == "target") {
            if (!(ls >> spec.target[0] >> spec.target[1] >> spec.target_radius))
                throw ParseError(where + "expected 'target <x> <y> <radius>'");
            saw_target = true;
        } else if (tag == "drag") {
            if (!(ls >> spec.drag)) throw ParseError(where + "expected 'drag <d>'");
        } else if (tag == "max_steps") {
            if (!(ls >> spec.max_steps)) throw ParseError(where + "expected 'max_steps <n>'");
        } else if (tag == "reward_scale") {
            if (!(ls >> spec.reward_scale)) throw ParseError(where + "expected 'reward_scale <s>'");
        } else {
            throw ParseError(where + "unknown directive '" + tag + "'");
        }
    }
    if (!saw_start || !saw_target) throw ParseError("pinball config needs 'start' and 'target' lines");
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ParseError(std::string("pinball invariant violated: ") + e.what());
    }
    return spec;
}

}  // namespace ptf::envs
