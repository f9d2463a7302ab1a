#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "ptf/common.hpp"

namespace ptf {

/// Dense row-major array of doubles. Rank is 1 or 2 everywhere in this
/// project; rank-2 tensors index as (row, col).
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        check_shape();
        data_.assign(static_cast<std::size_t>(count_), 0.0);
    }

    Tensor(std::vector<int> shape, std::vector<double> data, bool validate_finite = true)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        if (static_cast<std::size_t>(count_) != data_.size())
            throw ContractError("tensor data length does not match shape");
        if (validate_finite) {
            for (double v : data_)
                if (!std::isfinite(v)) throw ContractError("tensor input contains NaN/Inf");
        }
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}, false); }
    static Tensor vec(std::vector<double> v) {
        const int n = static_cast<int>(v.size());
        return Tensor({n}, std::move(v));
    }
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int numel() const { return count_; }
    int rows() const { return shape_.empty() ? 0 : shape_[0]; }
    int cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool empty() const { return count_ == 0; }

    double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }
    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    int argmax() const {
        int best = 0;
        for (int i = 1; i < count_; ++i)
            if (data_[i] > data_[best]) best = i;
        return best;
    }

private:
    void check_shape() {
        long long n = shape_.empty() ? 0 : 1;
        for (int d : shape_) {
            if (d <= 0) throw ContractError("tensor dimensions must be positive");
            n *= d;
        }
        count_ = static_cast<int>(n);
    }

    std::vector<int> shape_;
    std::vector<double> data_;
    int count_ = 0;
};

}  // namespace ptf
