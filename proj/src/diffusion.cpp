#include "diffirm/diffusion.hpp"

#include <cmath>
#include <string>

#include "diffirm/errors.hpp"
#include "diffirm/graph.hpp"

namespace diffirm {

NoiseSchedule NoiseSchedule::linear(double alpha_min, double alpha_max, std::int64_t steps) {
    if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max) || !(alpha_max < 1.0)) {
        throw contract_error("noise schedule: need 0 < alpha_min <= alpha_max < 1");
    }
    if (steps < 1) throw contract_error("noise schedule: need at least one step");
    NoiseSchedule s;
    s.alpha_.resize(static_cast<std::size_t>(steps));
    s.alpha_bar_.resize(static_cast<std::size_t>(steps));
    double prod = 1.0;
    for (std::int64_t l = 0; l < steps; ++l) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(l) / static_cast<double>(steps - 1);
        const double a = alpha_min + frac * (alpha_max - alpha_min);
        s.alpha_[static_cast<std::size_t>(l)] = a;
        prod *= 1.0 - a;
        s.alpha_bar_[static_cast<std::size_t>(l)] = prod;
    }
    return s;
}

double NoiseSchedule::alpha(std::int64_t l) const {
    if (l < 1 || l > steps()) throw contract_error("noise schedule: step " + std::to_string(l) + " out of range");
    return alpha_[static_cast<std::size_t>(l - 1)];
}

double NoiseSchedule::alpha_bar(std::int64_t l) const {
    if (l < 1 || l > steps()) throw contract_error("noise schedule: step " + std::to_string(l) + " out of range");
    return alpha_bar_[static_cast<std::size_t>(l - 1)];
}

Tensor step_embedding(std::int64_t l, std::int64_t d_emb) {
    if (d_emb < 2 || d_emb % 2 != 0) throw contract_error("step_embedding: dimension must be even and positive");
    std::vector<double> e(static_cast<std::size_t>(d_emb));
    for (std::int64_t i = 0; 2 * i < d_emb; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d_emb));
        e[static_cast<std::size_t>(2 * i)] = std::sin(static_cast<double>(l) * freq);
        e[static_cast<std::size_t>(2 * i + 1)] = std::cos(static_cast<double>(l) * freq);
    }
    return Tensor::from_data({d_emb}, std::move(e), false);
}

Params init_denoiser(const DenoiserSpec& spec, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "denoiser-init");
    Params p;
    const std::int64_t in = spec.feature_cols() + spec.d_emb;
    p.add("dn1_w", glorot_matrix(in, spec.hidden, rng));
    p.add("dn1_b", Tensor::zeros({spec.hidden}, true));
    p.add("dn2_w", glorot_matrix(spec.hidden, spec.feature_cols(), rng));
    p.add("dn2_b", Tensor::zeros({spec.feature_cols()}, true));
    return p;
}

Tensor predict_noise(const DenoiserSpec& spec, const Params& psi, const Tensor& x_l,
                     std::int64_t l, const Tensor& a_hat) {
    if (x_l.cols() != spec.feature_cols()) {
        throw dimension_error("predict_noise: expected " + std::to_string(spec.feature_cols()) + " feature columns");
    }
    Tensor emb = broadcast_rows(step_embedding(l, spec.d_emb), x_l.rows());
    Tensor in = concat_cols({x_l, emb});
    const std::int64_t n = a_hat.rows();
    Tensor h = relu(add_bias(graph_mix(a_hat, matmul(in, psi.get("dn1_w")), n), psi.get("dn1_b")));
    return add_bias(graph_mix(a_hat, matmul(h, psi.get("dn2_w")), n), psi.get("dn2_b"));
}

namespace {

Tensor gaussian_like(const Tensor& x, Rng& rng) {
    std::vector<double> noise(static_cast<std::size_t>(x.numel()));
    for (auto& v : noise) v = rng.normal();
    return Tensor::from_data(x.shape(), std::move(noise), false);
}

} // namespace

Tensor forward_diffuse(const Tensor& x0, std::int64_t l, const NoiseSchedule& sched, Rng& rng) {
    const double ab = sched.alpha_bar(l);
    Tensor eps = gaussian_like(x0, rng);
    return add(scale(x0, std::sqrt(ab)), scale(eps, std::sqrt(1.0 - ab)));
}

Tensor forward_diffuse_one_step(const Tensor& x_prev, std::int64_t l, const NoiseSchedule& sched, Rng& rng) {
    const double a = sched.alpha(l);
    Tensor eps = gaussian_like(x_prev, rng);
    return add(scale(x_prev, std::sqrt(1.0 - a)), scale(eps, std::sqrt(a)));
}

Tensor denoise_mean(const Tensor& x_l, const Tensor& eps_hat, std::int64_t l, const NoiseSchedule& sched) {
    const double a = sched.alpha(l);
    const double ab = sched.alpha_bar(l);
    // mu = (x_l - a / sqrt(1 - ab) * eps_hat) / sqrt(1 - a)
    Tensor shifted = sub(x_l, scale(eps_hat, a / std::sqrt(1.0 - ab)));
    return scale(shifted, 1.0 / std::sqrt(1.0 - a));
}

Tensor denoise_step_from_mean(const Tensor& mu, std::int64_t l, const NoiseSchedule& sched, Rng& rng) {
    if (l < 1 || l > sched.steps()) throw contract_error("denoise_step: step out of range");
    if (l == 1) return mu; // deterministic final step
    Tensor z = gaussian_like(mu, rng);
    return add(mu, scale(z, std::sqrt(sched.alpha(l))));
}

Tensor denoise_step(const DenoiserSpec& spec, const Params& psi, const Tensor& x_l,
                    std::int64_t l, const Tensor& a_hat, const NoiseSchedule& sched, Rng& rng) {
    Tensor eps_hat = predict_noise(spec, psi, x_l, l, a_hat);
    return denoise_step_from_mean(denoise_mean(x_l, eps_hat, l, sched), l, sched, rng);
}

Tensor denoising_loss(const DenoiserSpec& spec, const Params& psi, const Tensor& x0,
                      const Tensor& a_hat, const NoiseSchedule& sched, Rng& rng) {
    if (x0.numel() == 0) throw contract_error("denoising_loss: empty batch");
    const std::int64_t l = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(sched.steps())));
    const double ab = sched.alpha_bar(l);
    Tensor eps = gaussian_like(x0, rng);
    Tensor x_l = add(scale(x0, std::sqrt(ab)), scale(eps, std::sqrt(1.0 - ab)));
    Tensor eps_hat = predict_noise(spec, psi, x_l, l, a_hat);
    return mse_loss(eps_hat, eps);
}

Tensor sample_environment(const DenoiserSpec& spec, const Params& psi, const Tensor& x,
                          const Tensor& a_hat, const NoiseSchedule& sched,
                          std::int64_t l_aug, Rng& rng) {
    if (l_aug < 1 || l_aug > sched.steps()) {
        throw contract_error("sample_environment: noising depth " + std::to_string(l_aug) + " out of range");
    }
    Tensor cur = forward_diffuse(x, l_aug, sched, rng);
    for (std::int64_t l = l_aug; l >= 1; --l) {
        cur = denoise_step(spec, psi, cur, l, a_hat, sched, rng);
    }
    return cur;
}

AugmentBatch sample_environments(const DenoiserSpec& spec, const Params& psi, const Tensor& x,
                                 const Tensor& a_hat, const NoiseSchedule& sched,
                                 std::int64_t l_aug, std::int64_t k, Rng& rng) {
    if (k < 1) throw contract_error("sample_environments: need K >= 1");
    AugmentBatch out;
    out.l_aug = l_aug;
    out.x_hat.reserve(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) {
        out.x_hat.push_back(sample_environment(spec, psi, x, a_hat, sched, l_aug, rng));
    }
    return out;
}

} // namespace diffirm
