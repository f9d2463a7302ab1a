#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "ptf/nn/params.hpp"
#include "ptf/tensor.hpp"

namespace ptf::nn {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over tensors. Nodes are appended in evaluation order,
/// so walking the tape backwards from the loss is already a reverse
/// topological order. Parameter leaves remember their store entry and
/// accumulate gradients into it additively on every backward() call.
class Graph {
    enum class Op {
        Input,
        Param,
        MatVec,
        Add,
        Sub,
        Mul,
        Neg,
        Scale,
        AddC,
        Tanh,
        Sigmoid,
        Exp,
        Log,
        LogFloor,
        Square,
        Softmax,
        Sum,
        Mean,
        Pick,
        Min,
        Clamp,
    };

    struct Node {
        Tensor val;
        Tensor grad;
        Op op;
        int a = -1;
        int b = -1;
        double c0 = 0.0;
        double c1 = 0.0;
        int aux = 0;
        ParameterStore* store = nullptr;
        int slot = -1;
    };

public:
    // Leaf holding externally supplied data; NaN/Inf rejected.
    Var input(const Tensor& t) {
        if (!t.all_finite()) throw ContractError("graph input contains NaN/Inf");
        return push(Op::Input, t);
    }

    // Leaf for internally produced constants (targets, advantages).
    Var constant(Tensor t) { return push(Op::Input, std::move(t)); }

    // Parameter leaf; one node per (store, name) pair, shared on reuse.
    Var param(ParameterStore& store, const std::string& name) {
        auto key = std::make_pair(&store, name);
        auto it = param_nodes_.find(key);
        if (it != param_nodes_.end()) return it->second;
        Var v = push(Op::Param, store.value(name));
        nodes_[static_cast<std::size_t>(v.id)].store = &store;
        nodes_[static_cast<std::size_t>(v.id)].slot = param_slot(store, name);
        param_nodes_.emplace(key, v);
        return v;
    }

    // y = W x, W:[m,n], x:[n].
    Var matvec(Var w, Var x) {
        const Tensor& W = val(w);
        const Tensor& X = val(x);
        if (W.shape().size() != 2 || W.cols() != X.numel())
            throw ConfigError("matvec shape mismatch");
        Tensor out({W.rows()});
        for (int i = 0; i < W.rows(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < W.cols(); ++j) acc += W.at(i, j) * X[j];
            out[i] = acc;
        }
        return push(Op::MatVec, std::move(out), w, x);
    }

    Var affine(Var w, Var x, Var bias) { return add(matvec(w, x), bias); }

    Var add(Var a, Var b) { return binary_elem(Op::Add, a, b, [](double x, double y) { return x + y; }); }
    Var sub(Var a, Var b) { return binary_elem(Op::Sub, a, b, [](double x, double y) { return x - y; }); }
    Var mul(Var a, Var b) { return binary_elem(Op::Mul, a, b, [](double x, double y) { return x * y; }); }
    Var min_elem(Var a, Var b) { return binary_elem(Op::Min, a, b, [](double x, double y) { return x <= y ? x : y; }); }

    Var neg(Var a) { return unary(Op::Neg, a, [](double x) { return -x; }); }
    Var scale(Var a, double c) {
        Var v = unary(Op::Scale, a, [c](double x) { return c * x; });
        nodes_[static_cast<std::size_t>(v.id)].c0 = c;
        return v;
    }
    Var add_const(Var a, double c) {
        Var v = unary(Op::AddC, a, [c](double x) { return x + c; });
        nodes_[static_cast<std::size_t>(v.id)].c0 = c;
        return v;
    }
    Var tanh(Var a) { return unary(Op::Tanh, a, [](double x) { return std::tanh(x); }); }
    Var sigmoid(Var a) {
        return unary(Op::Sigmoid, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    }
    Var exp(Var a) { return unary(Op::Exp, a, [](double x) { return std::exp(x); }); }
    Var log(Var a) { return unary(Op::Log, a, [](double x) { return std::log(x); }); }
    // log(max(x, floor)); zero gradient on the clamped side.
    Var log_floor(Var a, double floor) {
        Var v = unary(Op::LogFloor, a, [floor](double x) { return std::log(x > floor ? x : floor); });
        nodes_[static_cast<std::size_t>(v.id)].c0 = floor;
        return v;
    }
    Var square(Var a) { return unary(Op::Square, a, [](double x) { return x * x; }); }
    Var clamp(Var a, double lo, double hi) {
        Var v = unary(Op::Clamp, a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); });
        nodes_[static_cast<std::size_t>(v.id)].c0 = lo;
        nodes_[static_cast<std::size_t>(v.id)].c1 = hi;
        return v;
    }

    Var softmax(Var a) {
        const Tensor& x = val(a);
        Tensor out(x.shape());
        double mx = x[0];
        for (int i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
        double z = 0.0;
        for (int i = 0; i < x.numel(); ++i) {
            out[i] = std::exp(x[i] - mx);
            z += out[i];
        }
        for (int i = 0; i < x.numel(); ++i) out[i] /= z;
        return push(Op::Softmax, std::move(out), a);
    }

    Var sum(Var a) { return push(Op::Sum, Tensor::scalar(val(a).sum()), a); }
    Var mean(Var a) {
        const Tensor& x = val(a);
        return push(Op::Mean, Tensor::scalar(x.sum() / x.numel()), a);
    }
    Var pick(Var a, int index) {
        const Tensor& x = val(a);
        if (index < 0 || index >= x.numel()) throw ContractError("pick index out of range");
        Var v = push(Op::Pick, Tensor::scalar(x[index]), a);
        nodes_[static_cast<std::size_t>(v.id)].aux = index;
        return v;
    }
    Var dot(Var a, Var b) { return sum(mul(a, b)); }

    const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].val; }
    double scalar_val(Var v) const { return val(v)[0]; }
    std::size_t size() const { return nodes_.size(); }

    // Accumulates d(loss)/d(param) into every participating store. Node-local
    // gradients are reset each call, so repeated calls double-count into the
    // stores by design.
    void backward(Var loss) {
        if (!loss.valid() || val(loss).numel() != 1)
            throw ContractError("backprop requires a scalar loss");
        const int top = loss.id;
        for (int i = 0; i <= top; ++i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.grad.empty())
                n.grad = Tensor(n.val.shape());
            else
                n.grad.fill(0.0);
        }
        nodes_[static_cast<std::size_t>(top)].grad[0] = 1.0;
        for (int u = top; u >= 0; --u) {
            Node& n = nodes_[static_cast<std::size_t>(u)];
            step_back(n);
            if (n.op == Op::Param) {
                Tensor& g = n.store->entry(n.slot).grad;
                for (int k = 0; k < g.numel(); ++k) g[k] += n.grad[k];
            }
        }
    }

    void clear() {
        nodes_.clear();
        param_nodes_.clear();
    }

private:
    template <typename F>
    Var unary(Op op, Var a, F f) {
        const Tensor& x = val(a);
        Tensor out(x.shape());
        for (int i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
        return push(op, std::move(out), a);
    }

    template <typename F>
    Var binary_elem(Op op, Var a, Var b, F f) {
        const Tensor& x = val(a);
        const Tensor& y = val(b);
        if (!x.same_shape(y)) throw ConfigError("elementwise shape mismatch");
        Tensor out(x.shape());
        for (int i = 0; i < x.numel(); ++i) out[i] = f(x[i], y[i]);
        return push(op, std::move(out), a, b);
    }

    Var push(Op op, Tensor val, Var a = {}, Var b = {}) {
        Node n;
        n.op = op;
        n.val = std::move(val);
        n.a = a.id;
        n.b = b.id;
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    Tensor& grad_of(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const Tensor& val_of(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }

    void step_back(Node& n) {
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                return;
            case Op::MatVec: {
                const Tensor& W = val_of(n.a);
                const Tensor& X = val_of(n.b);
                Tensor& gw = grad_of(n.a);
                Tensor& gx = grad_of(n.b);
                for (int i = 0; i < W.rows(); ++i) {
                    const double gi = n.grad[i];
                    if (gi == 0.0) continue;
                    for (int j = 0; j < W.cols(); ++j) {
                        gw.at(i, j) += gi * X[j];
                        gx[j] += gi * W.at(i, j);
                    }
                }
                return;
            }
            case Op::Add: {
                accum(n.a, n.grad, 1.0);
                accum(n.b, n.grad, 1.0);
                return;
            }
            case Op::Sub: {
                accum(n.a, n.grad, 1.0);
                accum(n.b, n.grad, -1.0);
                return;
            }
            case Op::Mul: {
                const Tensor& x = val_of(n.a);
                const Tensor& y = val_of(n.b);
                Tensor& ga = grad_of(n.a);
                Tensor& gb = grad_of(n.b);
                for (int i = 0; i < x.numel(); ++i) {
                    ga[i] += n.grad[i] * y[i];
                    gb[i] += n.grad[i] * x[i];
                }
                return;
            }
            case Op::Min: {
                const Tensor& x = val_of(n.a);
                const Tensor& y = val_of(n.b);
                Tensor& ga = grad_of(n.a);
                Tensor& gb = grad_of(n.b);
                for (int i = 0; i < x.numel(); ++i) {
                    if (x[i] <= y[i])
                        ga[i] += n.grad[i];
                    else
                        gb[i] += n.grad[i];
                }
                return;
            }
            case Op::Neg:
                accum(n.a, n.grad, -1.0);
                return;
            case Op::Scale:
                accum(n.a, n.grad, n.c0);
                return;
            case Op::AddC:
                accum(n.a, n.grad, 1.0);
                return;
            case Op::Tanh: {
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < n.val.numel(); ++i)
                    ga[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
                return;
            }
            case Op::Sigmoid: {
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < n.val.numel(); ++i)
                    ga[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
                return;
            }
            case Op::Exp: {
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < n.val.numel(); ++i) ga[i] += n.grad[i] * n.val[i];
                return;
            }
            case Op::Log: {
                const Tensor& x = val_of(n.a);
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < x.numel(); ++i) ga[i] += n.grad[i] / x[i];
                return;
            }
            case Op::LogFloor: {
                const Tensor& x = val_of(n.a);
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < x.numel(); ++i)
                    if (x[i] > n.c0) ga[i] += n.grad[i] / x[i];
                return;
            }
            case Op::Square: {
                const Tensor& x = val_of(n.a);
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < x.numel(); ++i) ga[i] += 2.0 * n.grad[i] * x[i];
                return;
            }
            case Op::Softmax: {
                Tensor& ga = grad_of(n.a);
                double dot = 0.0;
                for (int i = 0; i < n.val.numel(); ++i) dot += n.grad[i] * n.val[i];
                for (int i = 0; i < n.val.numel(); ++i)
                    ga[i] += n.val[i] * (n.grad[i] - dot);
                return;
            }
            case Op::Sum: {
                Tensor& ga = grad_of(n.a);
                const double g = n.grad[0];
                for (int i = 0; i < ga.numel(); ++i) ga[i] += g;
                return;
            }
            case Op::Mean: {
                Tensor& ga = grad_of(n.a);
                const double g = n.grad[0] / ga.numel();
                for (int i = 0; i < ga.numel(); ++i) ga[i] += g;
                return;
            }
            case Op::Pick: {
                grad_of(n.a)[n.aux] += n.grad[0];
                return;
            }
            case Op::Clamp: {
                const Tensor& x = val_of(n.a);
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < x.numel(); ++i)
                    if (x[i] >= n.c0 && x[i] <= n.c1) ga[i] += n.grad[i];
                return;
            }
        }
    }

    void accum(int id, const Tensor& g, double c) {
        Tensor& ga = grad_of(id);
        for (int i = 0; i < ga.numel(); ++i) ga[i] += c * g[i];
    }

    static int param_slot(const ParameterStore& store, const std::string& name) {
        for (int i = 0; i < store.size(); ++i)
            if (store.entry(i).name == name) return i;
        throw ConfigError("unknown parameter: " + name);
    }

    struct KeyHash {
        std::size_t operator()(const std::pair<ParameterStore*, std::string>& k) const {
            return std::hash<ParameterStore*>()(k.first) ^ (std::hash<std::string>()(k.second) << 1);
        }
    };

    std::vector<Node> nodes_;
    std::unordered_map<std::pair<ParameterStore*, std::string>, Var, KeyHash> param_nodes_;
};

}  // namespace ptf::nn
