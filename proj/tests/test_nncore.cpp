#include <catch2/catch_amalgamated.hpp>

#include "fd_oracle.hpp"
#include "ptf/nn/adam.hpp"
#include "ptf/nn/losses.hpp"
#include "ptf/nn/mlp.hpp"

using Catch::Approx;
using namespace ptf;

TEST_CASE("tensor rejects bad shapes and non-finite inputs") {
    REQUIRE_THROWS_AS(Tensor({2}, {1.0, 2.0, 3.0}), ContractError);
    REQUIRE_THROWS_AS(Tensor({-1}), ContractError);
    REQUIRE_THROWS_AS(Tensor({2}, {1.0, std::nan("")}), ContractError);
    REQUIRE_NOTHROW(Tensor({2, 3}));
}

TEST_CASE("mlp_apply: uniform softmax under zero weights") {
    nn::MlpSpec spec;
    spec.input = 3;
    spec.heads = {{4, nn::Activation::Softmax}};
    nn::ParameterStore store;
    store.add("head0.W", Tensor({4, 3}));
    store.add("head0.b", Tensor({4}));
    auto out = nn::mlp_apply(spec, store, Tensor::vec({0.3, -1.0, 2.0}));
    for (int i = 0; i < 4; ++i) REQUIRE(out[0][i] == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("mlp_apply: softmax of bias logits [0, ln 3]") {
    nn::MlpSpec spec;
    spec.input = 2;
    spec.heads = {{2, nn::Activation::Softmax}};
    nn::ParameterStore store;
    store.add("head0.W", Tensor({2, 2}));
    store.add("head0.b", Tensor({2}, {0.0, std::log(3.0)}));
    auto out = nn::mlp_apply(spec, store, Tensor::vec({1.0, 1.0}));
    REQUIRE(out[0][0] == Approx(0.25).margin(1e-12));
    REQUIRE(out[0][1] == Approx(0.75).margin(1e-12));
}

TEST_CASE("mlp_apply: identity linear layer passes input through") {
    nn::MlpSpec spec;
    spec.input = 2;
    spec.heads = {{2, nn::Activation::Linear}};
    nn::ParameterStore store;
    store.add("head0.W", Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}));
    store.add("head0.b", Tensor({2}));
    auto out = nn::mlp_apply(spec, store, Tensor::vec({1.5, -2.0}));
    REQUIRE(out[0][0] == 1.5);
    REQUIRE(out[0][1] == -2.0);
}

TEST_CASE("mlp_apply rejects width mismatch") {
    nn::MlpSpec spec;
    spec.input = 3;
    spec.heads = {{2, nn::Activation::Linear}};
    nn::ParameterStore store;
    Rng rng(1);
    nn::init_mlp_params(spec, store, rng);
    REQUIRE_THROWS_AS(nn::mlp_apply(spec, store, Tensor::vec({1.0, 2.0})), ConfigError);
}

TEST_CASE("softmax head outputs sum to one and stay positive") {
    Rng rng(7);
    nn::MlpSpec spec;
    spec.input = 5;
    spec.hidden = {8};
    spec.heads = {{6, nn::Activation::Softmax}};
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        nn::ParameterStore store;
        nn::init_mlp_params(spec, store, rng);
        Tensor x({5});
        for (int i = 0; i < 5; ++i) x[i] = u(rng);
        auto out = nn::mlp_apply(spec, store, x);
        double sum = 0.0;
        for (int i = 0; i < 6; ++i) {
            REQUIRE(out[0][i] > 0.0);
            sum += out[0][i];
        }
        REQUIRE(sum == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("backprop: loss = w^2 at w=3 gives dL/dw = 6") {
    nn::ParameterStore store;
    store.add("w", Tensor::vec({3.0}));
    nn::Graph g;
    g.backward(g.sum(g.square(g.param(store, "w"))));
    REQUIRE(store.grad("w")[0] == Approx(6.0));
}

TEST_CASE("backprop: -log softmax(z)[k] gradient is softmax(z) - onehot(k)") {
    nn::ParameterStore store;
    store.add("z", Tensor::vec({0.2, -1.3, 0.7, 0.1}));
    const int k = 2;
    auto loss = [&] {
        nn::Graph g;
        return g.scalar_val(g.neg(g.log(g.pick(g.softmax(g.param(store, "z")), k))));
    };
    nn::Graph g;
    g.backward(g.neg(g.log(g.pick(g.softmax(g.param(store, "z")), k))));

    // closed form
    const Tensor probs = nn::softmax_stable(store.value("z"));
    for (int i = 0; i < 4; ++i)
        REQUIRE(store.grad("z")[i] == Approx(probs[i] - (i == k ? 1.0 : 0.0)).margin(1e-12));
    // and the finite-difference oracle
    const auto fd = test::finite_difference(store, loss);
    REQUIRE(test::max_rel_error(test::flatten_grads(store), fd) < 1e-4);
}

TEST_CASE("backprop accumulates additively across calls") {
    nn::ParameterStore store;
    store.add("w", Tensor::vec({2.0}));
    nn::Graph g;
    nn::Var loss = g.sum(g.square(g.param(store, "w")));
    g.backward(loss);
    g.backward(loss);
    REQUIRE(store.grad("w")[0] == Approx(8.0));
}

TEST_CASE("backprop rejects non-scalar losses") {
    nn::ParameterStore store;
    store.add("w", Tensor::vec({1.0, 2.0}));
    nn::Graph g;
    REQUIRE_THROWS_AS(g.backward(g.square(g.param(store, "w"))), ContractError);
}

TEST_CASE("gradients match finite differences on random compositions") {
    Rng rng(12345);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_int_distribution<int> width(2, 5);
    std::uniform_int_distribution<int> pick_op(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = width(rng), m = width(rng);
        nn::ParameterStore store;
        Tensor W({m, n}), a({n}), b({m});
        for (int i = 0; i < W.numel(); ++i) W[i] = u(rng);
        for (int i = 0; i < n; ++i) a[i] = u(rng);
        for (int i = 0; i < m; ++i) b[i] = u(rng);
        store.add("W", W);
        store.add("a", a);
        store.add("b", b);
        const int op1 = pick_op(rng), op2 = pick_op(rng);
        const bool use_mean = trial % 2 == 0;

        auto build = [&](nn::Graph& g) {
            nn::Var v = g.affine(g.param(store, "W"), g.param(store, "a"), g.param(store, "b"));
            auto apply = [&](nn::Var x, int op) {
                switch (op) {
                    case 0: return g.tanh(x);
                    case 1: return g.sigmoid(x);
                    case 2: return g.square(g.scale(x, 0.7));
                    case 3: return g.exp(g.scale(x, 0.4));
                    case 4: return g.softmax(x);
                    default: return g.log_floor(g.add_const(g.sigmoid(x), 0.1), 1e-8);
                }
            };
            v = apply(v, op1);
            v = g.mul(v, g.tanh(g.param(store, "b")));
            v = apply(v, op2);
            return use_mean ? g.mean(v) : g.sum(g.square(v));
        };
        auto loss = [&] {
            nn::Graph g;
            return g.scalar_val(build(g));
        };
        nn::Graph g;
        g.backward(build(g));
        const auto fd = test::finite_difference(store, loss);
        REQUIRE(test::max_rel_error(test::flatten_grads(store), fd) < 1e-4);
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    nn::ParameterStore store;
    store.add("w", Tensor::vec({1.0, -2.0}));
    nn::AdamState adam(nn::AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    adam.step(store);
    REQUIRE(store.value("w")[0] == 1.0);
    REQUIRE(store.value("w")[1] == -2.0);
}

TEST_CASE("adam: first bias-corrected step moves by about -lr * sign(g)") {
    nn::ParameterStore store;
    store.add("w", Tensor::vec({0.5}));
    store.grad("w")[0] = 3.7;
    nn::AdamState adam(nn::AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    adam.step(store);
    // mhat = g, vhat = g^2, so the step is lr * g / (|g| + eps) ~= lr
    REQUIRE(store.value("w")[0] == Approx(0.5 - 1e-3).margin(1e-9));
    REQUIRE(store.grad("w")[0] == 0.0);  // zeroed afterwards
}

TEST_CASE("adam: only parameters with gradient move") {
    nn::ParameterStore store;
    store.add("u", Tensor::vec({1.0}));
    store.add("v", Tensor::vec({2.0}));
    store.grad("u")[0] = 1.0;
    nn::AdamState adam(nn::AdamConfig{1e-2, 0.9, 0.999, 1e-8});
    adam.step(store);
    REQUIRE(store.value("u")[0] != 1.0);
    REQUIRE(store.value("v")[0] == 2.0);
}

TEST_CASE("adam is deterministic") {
    auto run = [] {
        nn::ParameterStore store;
        store.add("w", Tensor::vec({0.1, 0.2, 0.3}));
        nn::AdamState adam(nn::AdamConfig{});
        for (int i = 0; i < 5; ++i) {
            for (int k = 0; k < 3; ++k) store.grad("w")[k] = 0.1 * (k + 1) * (i + 1);
            adam.step(store);
        }
        return store.value("w");
    };
    const Tensor a = run(), b = run();
    for (int i = 0; i < 3; ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("cross_entropy: uniform against itself equals ln 4") {
    const Tensor p = Tensor::vec({0.25, 0.25, 0.25, 0.25});
    REQUIRE(nn::cross_entropy(p, p) == Approx(std::log(4.0)).margin(1e-12));
}

TEST_CASE("cross_entropy: one-hot target reduces to -ln q_i") {
    const Tensor p = Tensor::vec({0.0, 1.0, 0.0});
    const Tensor q = Tensor::vec({0.2, 0.5, 0.3});
    REQUIRE(nn::cross_entropy(p, q) == Approx(-std::log(0.5)).margin(1e-12));
}

TEST_CASE("cross_entropy: equals entropy when p == q, and dominates it otherwise") {
    Rng rng(99);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor p({4}), q({4});
        double sp = 0.0, sq = 0.0;
        for (int i = 0; i < 4; ++i) {
            p[i] = u(rng);
            q[i] = u(rng);
            sp += p[i];
            sq += q[i];
        }
        for (int i = 0; i < 4; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        REQUIRE(nn::cross_entropy(p, p) == Approx(nn::entropy_categorical(p)).margin(1e-12));
        // KL nonnegativity
        REQUIRE(nn::cross_entropy(p, q) - nn::entropy_categorical(p) >= -1e-12);
    }
}

TEST_CASE("cross_entropy rejects width mismatch") {
    REQUIRE_THROWS_AS(nn::cross_entropy(Tensor::vec({1.0}), Tensor::vec({0.5, 0.5})),
                      ContractError);
}

TEST_CASE("gaussian_log_prob: standard normal at the mode") {
    const Tensor zero = Tensor::vec({0.0});
    REQUIRE(nn::gaussian_log_prob(zero, zero, zero) ==
            Approx(-0.5 * std::log(2.0 * M_PI)).margin(1e-12));
}

TEST_CASE("gaussian_log_prob: at the mean the quadratic term vanishes") {
    const Tensor mean = Tensor::vec({0.3, -0.8});
    const Tensor log_std = Tensor::vec({0.7, -1.2});
    const double expected = 2.0 * (-0.5 * std::log(2.0 * M_PI)) - 0.7 - (-1.2);
    REQUIRE(nn::gaussian_log_prob(mean, log_std, mean) == Approx(expected).margin(1e-12));
}

TEST_CASE("gaussian_log_prob is translation invariant") {
    const Tensor mean = Tensor::vec({0.1, 0.2});
    const Tensor log_std = Tensor::vec({-0.5, 0.3});
    const Tensor action = Tensor::vec({0.4, -0.1});
    Tensor mean2 = mean, action2 = action;
    for (int i = 0; i < 2; ++i) {
        mean2[i] += 0.77;
        action2[i] += 0.77;
    }
    REQUIRE(nn::gaussian_log_prob(mean, log_std, action) ==
            Approx(nn::gaussian_log_prob(mean2, log_std, action2)).margin(1e-12));
}

TEST_CASE("entropy: categorical and Gaussian closed forms") {
    REQUIRE(nn::entropy_categorical(Tensor::vec({0.25, 0.25, 0.25, 0.25})) ==
            Approx(std::log(4.0)).margin(1e-12));
    REQUIRE(nn::entropy_categorical(Tensor::vec({0.0, 1.0, 0.0})) == Approx(0.0).margin(1e-12));
    REQUIRE(nn::entropy_gaussian(Tensor::vec({0.0, 0.0})) ==
            Approx(std::log(2.0 * M_PI * std::exp(1.0))).margin(1e-12));
}

TEST_CASE("graph losses match their plain counterparts") {
    Rng rng(5);
    nn::ParameterStore store;
    nn::MlpSpec spec;
    spec.input = 3;
    spec.hidden = {6};
    spec.heads = {{4, nn::Activation::Softmax}};
    nn::init_mlp_params(spec, store, rng);
    const Tensor x = Tensor::vec({0.1, -0.4, 0.9});
    const Tensor target = Tensor::vec({0.1, 0.6, 0.2, 0.1});

    const Tensor plain = nn::mlp_apply(spec, store, x)[0];
    nn::Graph g;
    nn::Var probs = nn::mlp_apply(g, spec, store, x)[0];
    for (int i = 0; i < 4; ++i) REQUIRE(g.val(probs)[i] == plain[i]);
    REQUIRE(g.scalar_val(nn::cross_entropy(g, target, probs)) ==
            Approx(nn::cross_entropy(target, plain)).margin(1e-14));
    REQUIRE(g.scalar_val(nn::entropy_categorical(g, probs)) ==
            Approx(nn::entropy_categorical(plain)).margin(1e-14));
}
