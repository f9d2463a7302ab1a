#pragma once

#include <atomic>
#include <cmath>
#include <vector>

#include "ptf/agents/policy.hpp"
#include "ptf/nn/losses.hpp"

namespace ptf::transfer {

enum class Mode { Adaptive, Fixed, Off };

/// Time-decaying, termination-gated coefficient on the distillation loss:
/// f(beta_o, t) = f(t) * (1 - beta),  f(t) = (1 + tanh(offset - slope*t))/2.
/// t counts global environment steps summed across workers.
class TransferSchedule {
public:
    TransferSchedule() = default;
    TransferSchedule(Mode mode, double fixed_weight = 0.5) : mode_(mode), fixed_(fixed_weight) {}

    Mode mode() const { return mode_; }
    double fixed_weight() const { return fixed_; }

    double f_of_t(long long t) const {
        return 0.5 * (1.0 + std::tanh(offset_ - slope_ * static_cast<double>(t)));
    }

    double weight(long long t, double beta) const {
        switch (mode_) {
            case Mode::Adaptive: return f_of_t(t) * (1.0 - beta);
            case Mode::Fixed: return fixed_;
            case Mode::Off: return 0.0;
        }
        return 0.0;
    }

    long long steps() const { return steps_.load(std::memory_order_relaxed); }
    // Returns the step count *before* the increment, i.e. t at action time.
    long long advance() { return steps_.fetch_add(1, std::memory_order_relaxed); }

private:
    Mode mode_ = Mode::Off;
    double fixed_ = 0.5;
    double offset_ = 3.0;
    double slope_ = 1e-3;
    std::atomic<long long> steps_{0};
};

// Evaluation points for the continuous distillation estimate: the source mean
// plus k samples from the source distribution. Drawn once per loss so the
// estimate stays fixed while the target parameters move.
inline std::vector<Tensor> distillation_actions(const agents::PolicyOutput& source, Rng& rng,
                                                int k = 4) {
    std::vector<Tensor> pts;
    pts.push_back(source.mean);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < k; ++i) {
        Tensor a({source.mean.numel()});
        for (int d = 0; d < a.numel(); ++d)
            a[d] = source.mean[d] + std::exp(source.log_std[d]) * z(rng);
        pts.push_back(std::move(a));
    }
    return pts;
}

// L_H toward the (frozen) source policy. Discrete: H(pi_o || pi_theta).
// Continuous: -mean_a log pi_theta(a|s) over the given evaluation points.
// Gradients flow only into the target policy.
inline nn::Var policy_distillation_loss(nn::Graph& g, const agents::PolicyOutput& source,
                                        const agents::PolicyVars& target,
                                        const std::vector<Tensor>* continuous_points = nullptr) {
    if (source.space.discrete) return nn::cross_entropy(g, source.probs, target.probs);
    if (continuous_points == nullptr || continuous_points->empty())
        throw ContractError("continuous distillation needs evaluation points");
    nn::Var total{};
    for (const Tensor& a : *continuous_points) {
        nn::Var nll = g.neg(nn::gaussian_log_prob(g, target.mean, target.log_std, a));
        total = total.valid() ? g.add(total, nll) : nll;
    }
    return g.scale(total, 1.0 / static_cast<double>(continuous_points->size()));
}

inline double policy_distillation_loss_value(const agents::PolicyOutput& source,
                                             const agents::PolicyOutput& target,
                                             const std::vector<Tensor>* continuous_points = nullptr) {
    if (source.space.discrete != target.space.discrete)
        throw ContractError("distillation across mismatched action spaces");
    if (source.space.discrete) return nn::cross_entropy(source.probs, target.probs);
    if (continuous_points == nullptr || continuous_points->empty())
        throw ContractError("continuous distillation needs evaluation points");
    double acc = 0.0;
    for (const Tensor& a : *continuous_points)
        acc -= nn::gaussian_log_prob(target.mean, target.log_std, a);
    return acc / static_cast<double>(continuous_points->size());
}

// KL(softmax(q_teacher / tau) || softmax(q_student)); the temperature is
// applied to the teacher only.
inline double value_distillation_kl(const Tensor& q_teacher, const Tensor& q_student, double tau) {
    if (q_teacher.numel() != q_student.numel())
        throw ContractError("value_distillation_kl width mismatch");
    if (tau <= 0.0) throw ContractError("value_distillation_kl needs tau > 0");
    Tensor scaled(q_teacher.shape());
    for (int i = 0; i < scaled.numel(); ++i) scaled[i] = q_teacher[i] / tau;
    const Tensor p = nn::softmax_stable(scaled);
    const Tensor q = nn::softmax_stable(q_student);
    double acc = 0.0;
    for (int i = 0; i < p.numel(); ++i)
        if (p[i] > 0.0) acc += p[i] * (std::log(p[i]) - std::log(q[i]));
    return acc;
}

// Taped variant for training a student head; teacher held constant.
inline nn::Var value_distillation_kl(nn::Graph& g, const Tensor& q_teacher, nn::Var q_student,
                                     double tau) {
    if (tau <= 0.0) throw ContractError("value_distillation_kl needs tau > 0");
    Tensor scaled(q_teacher.shape());
    for (int i = 0; i < scaled.numel(); ++i) scaled[i] = q_teacher[i] / tau;
    const Tensor p = nn::softmax_stable(scaled);
    Tensor log_p(p.shape());
    for (int i = 0; i < p.numel(); ++i) log_p[i] = std::log(p[i]);
    nn::Var log_q = g.log(g.softmax(q_student));
    // sum_i p_i (log p_i - log q_i)
    nn::Var cross = g.dot(g.constant(p), log_q);
    double self_term = 0.0;
    for (int i = 0; i < p.numel(); ++i) self_term += p[i] * log_p[i];
    return g.add_const(g.neg(cross), self_term);
}

}  // namespace ptf::transfer
