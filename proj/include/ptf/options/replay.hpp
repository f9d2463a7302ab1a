#pragma once

#include <unordered_set>
#include <vector>

#include "ptf/envs/types.hpp"

namespace ptf::options {

struct Transition {
    Tensor s;
    envs::Action a;
    double r = 0.0;
    Tensor s2;
    bool done = false;
};

/// FIFO ring buffer; at capacity the strictly oldest entry is evicted.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
    }

    void push(Transition t) {
        if (store_.size() < capacity_) {
            store_.push_back(std::move(t));
        } else {
            store_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }

    // Logical indexing, 0 = oldest.
    const Transition& at(std::size_t i) const { return store_[(head_ + i) % store_.size()]; }

    // Uniform sample of n distinct entries, returned oldest-first.
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const {
        if (n > store_.size()) throw ContractError("replay sample larger than buffer");
        std::vector<std::size_t> picked;
        picked.reserve(n);
        std::unordered_set<std::size_t> seen;
        // Floyd's algorithm for distinct indices.
        for (std::size_t j = store_.size() - n; j < store_.size(); ++j) {
            std::uniform_int_distribution<std::size_t> d(0, j);
            std::size_t k = d(rng);
            if (!seen.insert(k).second) {
                seen.insert(j);
                k = j;
            }
            picked.push_back(k);
        }
        std::sort(picked.begin(), picked.end());
        std::vector<const Transition*> out;
        out.reserve(n);
        for (std::size_t i : picked) out.push_back(&at(i));
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> store_;
};

}  // namespace ptf::options
