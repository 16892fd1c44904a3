#include "hydra/adam.hpp"

#include <cmath>

namespace hydra {

AdamState::AdamState(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.push_back(Tensor::zeros(p->value.shape));
        v_.push_back(Tensor::zeros(p->value.shape));
    }
}

void AdamState::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        if (p.trainable) {
            Tensor& m = m_[pi];
            Tensor& v = v_[pi];
            for (std::size_t i = 0; i < p.value.data.size(); ++i) {
                const double g = p.grad.data[i];
                m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
                v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m.data[i] / bc1;
                const double vhat = v.data[i] / bc2;
                p.value.data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
        p.zero_grad();
    }
}

double global_grad_norm(const std::vector<Parameter*>& params) {
    double acc = 0.0;
    for (const Parameter* p : params)
        for (double g : p->grad.data) acc += g * g;
    return std::sqrt(acc);
}

void clip_global_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (Parameter* p : params)
        for (double& g : p->grad.data) g *= scale;
}

}  // namespace hydra
