#include "diffirm/optim.hpp"

#include <cmath>

#include "diffirm/errors.hpp"

namespace diffirm {

Adam::Adam(AdamConfig cfg, const std::vector<Tensor>& params) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
        v_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    }
}

void Adam::step(std::vector<Tensor>& params) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (auto& p : params) grads.emplace_back(p.grad().begin(), p.grad().end());
    step_with(params, grads);
}

void Adam::step_with(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw dimension_error("adam: parameter count does not match optimizer state");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        const auto& g = grads[k];
        if (static_cast<std::int64_t>(g.size()) != p.numel() || m_[k].size() != g.size()) {
            throw dimension_error("adam: gradient shape does not match parameter");
        }
        std::vector<double> updated(p.data().begin(), p.data().end());
        for (std::size_t i = 0; i < g.size(); ++i) {
            m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g[i];
            v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m_[k][i] / bc1;
            const double vhat = v_[k][i] / bc2;
            updated[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        p.set_data(updated);
    }
}

double grad_global_norm(const std::vector<std::vector<double>>& grads) {
    double acc = 0.0;
    for (const auto& g : grads)
        for (double v : g) acc += v * v;
    return std::sqrt(acc);
}

void clip_grads(std::vector<std::vector<double>>& grads, double max_norm) {
    const double norm = grad_global_norm(grads);
    if (norm <= max_norm || norm == 0.0) return;
    const double s = max_norm / norm;
    for (auto& g : grads)
        for (double& v : g) v *= s;
}

} // namespace diffirm
