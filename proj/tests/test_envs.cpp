#include <catch2/catch_amalgamated.hpp>

#include "ptf/envs/env.hpp"

using Catch::Approx;
using namespace ptf;
using namespace ptf::envs;

namespace {

GridWorldSpec open_grid(int w, int h, GridCell goal, int max_steps = 500) {
    GridWorldSpec spec;
    spec.width = w;
    spec.height = h;
    spec.walls.assign(static_cast<std::size_t>(w) * h, 0);
    spec.goal = goal;
    spec.max_steps = max_steps;
    spec.validate();
    return spec;
}

PinballSpec bare_pinball() {
    PinballSpec spec;
    spec.polygons.clear();
    spec.start = {0.5, 0.5};
    spec.target = {0.9, 0.1};
    spec.validate();
    return spec;
}

}  // namespace

TEST_CASE("grid_step: reaching the goal pays the goal reward and ends") {
    auto spec = open_grid(5, 5, {3, 2});
    GridCell cell{2, 2};
    auto out = grid_step(spec, cell, kRight, 0);
    REQUIRE(out.raw_reward == 5.0);
    REQUIRE(out.done);
    REQUIRE(cell == spec.goal);
}

TEST_CASE("grid_step: moves into walls and off-grid are no-ops with zero reward") {
    auto spec = open_grid(3, 3, {2, 2});
    spec.walls[1 * 3 + 1] = 1;  // wall at (1,1)
    GridCell cell{1, 0};
    auto out = grid_step(spec, cell, kDown, 0);  // into the wall
    REQUIRE(cell.x == 1);
    REQUIRE(cell.y == 0);
    REQUIRE(out.reward == 0.0);
    REQUIRE_FALSE(out.done);
    out = grid_step(spec, cell, kUp, 1);  // off-grid
    REQUIRE(cell.y == 0);
    REQUIRE_FALSE(out.done);
}

TEST_CASE("grid_step: plain move right increments x") {
    auto spec = open_grid(4, 4, {3, 3});
    GridCell cell{1, 1};
    auto out = grid_step(spec, cell, kRight, 0);
    REQUIRE(cell.x == 2);
    REQUIRE(out.reward == 0.0);
}

TEST_CASE("grid_step: exceeding max_steps terminates with zero reward") {
    auto spec = open_grid(3, 3, {2, 2}, 2);
    GridCell cell{0, 0};
    auto out = grid_step(spec, cell, kRight, 0);
    REQUIRE_FALSE(out.done);
    cell = {0, 0};
    out = grid_step(spec, cell, kLeft, 1);  // second and last allowed step
    REQUIRE(out.done);
    REQUIRE(out.reward == 0.0);
}

TEST_CASE("grid_step rejects an invalid current cell") {
    auto spec = open_grid(3, 3, {2, 2});
    GridCell cell{7, 0};
    REQUIRE_THROWS_AS(grid_step(spec, cell, kUp, 0), ContractError);
}

TEST_CASE("grid_observe: enclosure, open interior, and corner normalization") {
    auto enclosed = open_grid(3, 3, {2, 0});
    for (int i = 0; i < 9; ++i) enclosed.walls[i] = 1;
    enclosed.walls[4] = 0;  // only the center is free
    enclosed.goal = {1, 1};
    Tensor obs = grid_observe(enclosed, {1, 1});
    for (int k = 2; k < 10; ++k) REQUIRE(obs[k] == 1.0);

    auto open = open_grid(5, 5, {4, 4});
    obs = grid_observe(open, {2, 2});
    for (int k = 2; k < 10; ++k) REQUIRE(obs[k] == 0.0);

    auto big = open_grid(24, 21, {5, 5});
    obs = grid_observe(big, {0, 0});
    REQUIRE(obs[0] == 0.0);
    REQUIRE(obs[1] == 0.0);
    // NW, N, NE and W are off-grid; E, SW... follow row order
    REQUIRE(obs[2] == 1.0);
    REQUIRE(obs[3] == 1.0);
    REQUIRE(obs[4] == 1.0);
    REQUIRE(obs[5] == 1.0);
    REQUIRE(obs[6] == 0.0);
    REQUIRE(obs[7] == 1.0);
    REQUIRE(obs[8] == 0.0);
    REQUIRE(obs[9] == 0.0);
}

TEST_CASE("grid fuzz: the agent never occupies a wall cell") {
    const std::string text =
        "grid 8 6 max_steps=1000000 goal_reward=5\n"
        "........\n"
        ".##..#..\n"
        ".#...#.G\n"
        ".#.###..\n"
        "...#....\n"
        "........\n";
    auto spec = parse_grid_config(text);
    Rng rng(42);
    std::uniform_int_distribution<int> act(0, 3);
    GridCell cell{0, 0};
    for (int i = 0; i < 100000; ++i) {
        grid_step(spec, cell, act(rng), 0);
        REQUIRE_FALSE(spec.wall(cell.x, cell.y));
        if (cell == spec.goal) cell = {0, 0};
    }
}

TEST_CASE("grid optimal return matches a BFS shortest-path rollout") {
    const std::string text =
        "grid 6 5 max_steps=200 goal_reward=5\n"
        "......\n"
        ".###..\n"
        "...#.G\n"
        ".#.#..\n"
        ".#....\n";
    auto spec = parse_grid_config(text);
    const auto dist = grid_goal_distances(spec);
    const double gamma = 0.99;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            if (spec.wall(x, y) || (spec.goal == GridCell{x, y})) continue;
            const int d = dist[static_cast<std::size_t>(y) * spec.width + x];
            REQUIRE(d > 0);
            // walk greedily along decreasing BFS distance
            GridCell cell{x, y};
            double got = 0.0, gpow = 1.0;
            for (int steps = 0; steps < d; ++steps) {
                static constexpr int moves[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
                for (int a = 0; a < 4; ++a) {
                    const int nx = cell.x + moves[a][0], ny = cell.y + moves[a][1];
                    if (spec.wall(nx, ny)) continue;
                    if (dist[static_cast<std::size_t>(ny) * spec.width + nx] == d - steps - 1) {
                        auto out = grid_step(spec, cell, a, steps);
                        got += gpow * out.reward;
                        gpow *= gamma;
                        break;
                    }
                }
            }
            REQUIRE(cell == spec.goal);
            REQUIRE(got == Approx(grid_optimal_return(spec, dist, {x, y}, gamma)).margin(1e-12));
        }
}

TEST_CASE("grid map parsing: minimal map, and invariant rejection") {
    auto spec = parse_grid_config("grid 3 3 max_steps=50 goal_reward=2.5\n...\n.G.\n...\n");
    REQUIRE(spec.width == 3);
    REQUIRE(spec.goal == GridCell{1, 1});
    REQUIRE(spec.max_steps == 50);
    REQUIRE(spec.goal_reward == 2.5);

    REQUIRE_THROWS_AS(parse_grid_config("grid 3 1\n...\n"), ParseError);        // no goal
    REQUIRE_THROWS_AS(parse_grid_config("grid 3 1\nGG.\n"), ParseError);        // two goals
    REQUIRE_THROWS_AS(parse_grid_config("grid 3 2\n..G\n"), ParseError);        // missing row
    REQUIRE_THROWS_AS(parse_grid_config("grid 3 1\n..X\n"), ParseError);        // bad cell
    REQUIRE_THROWS_AS(parse_grid_config("grid 3 1 foo=1\n..G\n"), ParseError);  // bad option

    // goal placed inside a wall violates the spec invariant directly
    GridWorldSpec bad;
    bad.width = bad.height = 2;
    bad.walls = {1, 0, 0, 0};
    bad.goal = {0, 0};
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("pinball: drag-only step decays velocity geometrically") {
    auto spec = bare_pinball();
    PinballState s{0.5, 0.5, 1.0, 0.0};
    auto out = pinball_step(spec, s, 0.0, 0.0, 0);
    REQUIRE(s.vx == Approx(0.995).margin(1e-15));
    REQUIRE(s.vy == 0.0);
    REQUIRE(out.raw_reward == -1.0);
    REQUIRE(out.reward == Approx(-1.0 * spec.reward_scale));

    // exact geometric decay over 100 steps
    PinballState t{0.5, 0.9, 0.4, -0.2};
    spec.target = {0.05, 0.05};
    spec.validate();
    double speed0 = std::sqrt(t.vx * t.vx + t.vy * t.vy);
    for (int i = 0; i < 100; ++i) pinball_step(spec, t, 0.0, 0.0, i);
    const double speed = std::sqrt(t.vx * t.vx + t.vy * t.vy);
    REQUIRE(speed == Approx(speed0 * std::pow(0.995, 100)).margin(1e-12));
}

TEST_CASE("pinball: thrust penalty is -5, noop is -1, goal is +10000") {
    auto spec = bare_pinball();
    PinballState s{0.5, 0.5, 0.0, 0.0};
    auto out = pinball_step(spec, s, 0.1, 0.0, 0);
    REQUIRE(out.raw_reward == -5.0);
    out = pinball_step(spec, s, 0.0, 0.0, 1);
    REQUIRE(out.raw_reward == -1.0);

    PinballState near{0.9, 0.13, 0.0, 0.0};
    out = pinball_step(spec, near, 0.0, 0.6, 2);  // moving down toward target
    bool done = out.done;
    int i = 3;
    while (!done) {
        out = pinball_step(spec, near, 0.0, 0.0, i++);
        done = out.done;
    }
    REQUIRE(out.raw_reward == 10000.0);
    REQUIRE(out.reward == Approx(1.0));
}

TEST_CASE("pinball: head-on elastic bounce off a vertical edge reverses vx") {
    auto spec = bare_pinball();
    spec.polygons.push_back({{0.7, 0.2}, {0.7, 0.8}, {0.75, 0.8}, {0.75, 0.2}});
    spec.validate();
    PinballState s{0.6, 0.5, 1.0, 0.0};
    for (int i = 0; i < 40; ++i) {
        pinball_step(spec, s, 0.0, 0.0, 0);
        if (s.vx < 0.0) break;
    }
    REQUIRE(s.vx < 0.0);
    REQUIRE(s.vy == 0.0);
    REQUIRE(s.x < 0.7);
}

TEST_CASE("pinball: elastic collisions preserve speed") {
    auto spec = bare_pinball();
    spec.polygons.push_back({{0.55, 0.1}, {0.75, 0.45}, {0.6, 0.7}, {0.4, 0.6}});
    spec.target = {0.05, 0.05};
    spec.validate();
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PinballState s{0.2, 0.5, 0.8, 0.1};
    double speed_before_drag;
    for (int i = 0; i < 500; ++i) {
        // measure across one step without drag interference: speed after the
        // impulse, before integration, must match post-integration speed
        double vx = s.vx + 0.0, vy = s.vy + 0.0;
        speed_before_drag = std::hypot(vx, vy);
        pinball_step(spec, s, 0.0, 0.0, i);
        const double after = std::hypot(s.vx, s.vy) / spec.drag;
        REQUIRE(after == Approx(speed_before_drag).margin(1e-9));
        if (std::hypot(s.vx, s.vy) < 1e-4) {
            s.vx = u(rng);
            s.vy = u(rng);
        }
    }
}

TEST_CASE("pinball: NaN action is rejected") {
    auto spec = bare_pinball();
    PinballState s{0.5, 0.5, 0.0, 0.0};
    REQUIRE_THROWS_AS(pinball_step(spec, s, std::nan(""), 0.0, 0), ContractError);
}

TEST_CASE("pinball_observe returns (x, y, vx, vy)") {
    auto spec = bare_pinball();
    PinballState s{0.3, 0.7, -0.2, 0.5};
    Tensor obs = pinball_observe(spec, s);
    REQUIRE(obs[0] == 0.3);
    REQUIRE(obs[1] == 0.7);
    REQUIRE(obs[2] == -0.2);
    REQUIRE(obs[3] == 0.5);
}

TEST_CASE("pinball config parsing") {
    const std::string text =
        "ball radius=0.02\n"
        "start 0.2 0.9\n"
        "target 0.9 0.2 0.04\n"
        "drag 0.995\n"
        "max_steps 500\n"
        "reward_scale 0.0001\n"
        "polygon 0.3 0.3 0.45 0.3 0.45 0.45 0.3 0.45\n";
    auto spec = parse_pinball_config(text);
    REQUIRE(spec.drag == 0.995);
    REQUIRE(spec.max_steps == 500);
    REQUIRE(spec.ball_radius == 0.02);
    REQUIRE(spec.polygons.size() == 1);
    REQUIRE(spec.reward_scale == 0.0001);

    REQUIRE_THROWS_AS(parse_pinball_config("start 0.5 0.5\n"), ParseError);  // no target
    REQUIRE_THROWS_AS(parse_pinball_config("wat 1\nstart 0.5 0.5\ntarget 0.9 0.9 0.04\n"),
                      ParseError);
    // start inside an obstacle violates the invariant
    REQUIRE_THROWS_AS(
        parse_pinball_config("start 0.35 0.35\ntarget 0.9 0.9 0.04\n"
                             "polygon 0.3 0.3 0.45 0.3 0.45 0.45 0.3 0.45\n"),
        ParseError);
}

TEST_CASE("parse_env_config dispatches by first directive") {
    auto env1 = parse_env_config("grid 3 3\n...\n.G.\n...\n");
    REQUIRE(std::holds_alternative<GridWorldSpec>(env1));
    auto env2 = parse_env_config("# comment\nstart 0.2 0.9\ntarget 0.9 0.2 0.04\n");
    REQUIRE(std::holds_alternative<PinballSpec>(env2));
    REQUIRE_THROWS_AS(parse_env_config("bogus\n"), ParseError);
}

TEST_CASE("episodes replay bit-identically under the same seed") {
    const std::string text = "grid 5 5 max_steps=40 goal_reward=5\n.....\n.....\n..G..\n.....\n.....\n";
    const EnvironmentSpec env = parse_env_config(text);
    auto run = [&] {
        Episode ep(env);
        Rng env_rng(7), act_rng(9);
        std::uniform_int_distribution<int> act(0, 3);
        std::vector<double> trace;
        ep.reset(env_rng);
        for (int i = 0; i < 500; ++i) {
            auto out = ep.step(Action::discrete(act(act_rng)));
            trace.push_back(out.observation[0]);
            trace.push_back(out.observation[1]);
            trace.push_back(out.reward);
            if (out.done) ep.reset(env_rng);
        }
        return trace;
    };
    REQUIRE(run() == run());
}

TEST_CASE("bundled maps parse and agree with the spec constants") {
    std::ifstream in(std::string(PTF_SOURCE_DIR) + "/maps/grid_w_g.map");
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    auto spec = parse_grid_config(buf.str());
    REQUIRE(spec.width == 24);
    REQUIRE(spec.height == 21);
    REQUIRE(spec.goal_reward == 5.0);

    std::ifstream pin(std::string(PTF_SOURCE_DIR) + "/maps/pinball_g.pin");
    REQUIRE(pin.good());
    std::stringstream pbuf;
    pbuf << pin.rdbuf();
    auto pspec = parse_pinball_config(pbuf.str());
    REQUIRE(pspec.drag == 0.995);
    REQUIRE(pspec.max_steps == 500);
}
