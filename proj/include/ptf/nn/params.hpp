#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ptf/tensor.hpp"

namespace ptf::nn {

/// Named weight tensors, each paired with a gradient accumulator of the same
/// shape. Iteration follows insertion order so that optimizer sweeps and
/// serialization are deterministic.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    Tensor& add(const std::string& name, Tensor init) {
        if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
        index_[name] = static_cast<int>(entries_.size());
        entries_.push_back({name, std::move(init), Tensor()});
        Entry& e = entries_.back();
        e.grad = Tensor(e.value.shape());
        return e.value;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }
    int size() const { return static_cast<int>(entries_.size()); }

    Entry& entry(int i) { return entries_[static_cast<std::size_t>(i)]; }
    const Entry& entry(int i) const { return entries_[static_cast<std::size_t>(i)]; }

    Tensor& value(const std::string& name) { return entries_[find(name)].value; }
    const Tensor& value(const std::string& name) const { return entries_[find(name)].value; }
    Tensor& grad(const std::string& name) { return entries_[find(name)].grad; }
    const Tensor& grad(const std::string& name) const { return entries_[find(name)].grad; }

    void zero_grads() {
        for (Entry& e : entries_) e.grad.fill(0.0);
    }

    // Overwrites values from a store with identical layout (target-network
    // sync, worker snapshots).
    void copy_values_from(const ParameterStore& other) {
        require_same_layout(other);
        for (int i = 0; i < size(); ++i)
            entries_[static_cast<std::size_t>(i)].value = other.entry(i).value;
    }

    // Adds the other store's gradient accumulators into ours.
    void accumulate_grads_from(const ParameterStore& other) {
        require_same_layout(other);
        for (int i = 0; i < size(); ++i) {
            Tensor& g = entries_[static_cast<std::size_t>(i)].grad;
            const Tensor& og = other.entry(i).grad;
            for (int k = 0; k < g.numel(); ++k) g[k] += og[k];
        }
    }

    std::size_t total_params() const {
        std::size_t n = 0;
        for (const Entry& e : entries_) n += static_cast<std::size_t>(e.value.numel());
        return n;
    }

private:
    std::size_t find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
        return static_cast<std::size_t>(it->second);
    }

    void require_same_layout(const ParameterStore& other) const {
        if (other.size() != size()) throw ConfigError("parameter store layout mismatch");
        for (int i = 0; i < size(); ++i) {
            const Entry& a = entries_[static_cast<std::size_t>(i)];
            const Entry& b = other.entry(i);
            if (a.name != b.name || !a.value.same_shape(b.value))
                throw ConfigError("parameter store layout mismatch at " + a.name);
        }
    }

    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace ptf::nn
