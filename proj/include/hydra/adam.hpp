#pragma once

#include <cstdint>
#include <vector>

#include "hydra/autograd.hpp"

namespace hydra {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction over a fixed parameter set. Frozen parameters are
// left bit-identical; all gradients in the set are zeroed after each step.
class AdamState {
  public:
    AdamState(std::vector<Parameter*> params, AdamConfig cfg = {});

    void step();

    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }
    const Tensor& first_moment(std::size_t param_index) const { return m_[param_index]; }
    const Tensor& second_moment(std::size_t param_index) const { return v_[param_index]; }

  private:
    std::vector<Parameter*> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    AdamConfig cfg_;
    long step_count_ = 0;
};

double global_grad_norm(const std::vector<Parameter*>& params);
void clip_global_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace hydra
