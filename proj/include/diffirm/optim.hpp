#pragma once

#include <cstdint>
#include <vector>

#include "diffirm/tensor.hpp"

namespace diffirm {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are bound to the parameter list
// given at construction; step() consumes either the parameters' accumulated
// grads or an explicitly combined gradient.
class Adam {
public:
    Adam() = default;
    Adam(AdamConfig cfg, const std::vector<Tensor>& params);

    // Standard descent update from each parameter's grad buffer.
    void step(std::vector<Tensor>& params);

    // Update from caller-combined gradients (one vector per parameter).
    void step_with(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads);

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return t_; }

    // Exposed for checkpointing.
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    void set_step_count(std::int64_t t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t t_ = 0;
};

// Global L2 norm over a set of gradient vectors.
double grad_global_norm(const std::vector<std::vector<double>>& grads);

// Scale gradients in place so their global norm is at most max_norm.
void clip_grads(std::vector<std::vector<double>>& grads, double max_norm);

} // namespace diffirm
