#pragma once

#include <cstdint>
#include <vector>

#include "diffirm/params.hpp"
#include "diffirm/rng.hpp"
#include "diffirm/tensor.hpp"

namespace diffirm {

// Per-step corruption strengths alpha(l) for the forward chain
// q(x_l | x_{l-1}) = N(sqrt(1 - alpha_l) x_{l-1}, alpha_l I) and the
// cumulative products alpha_bar_l = prod_{j<=l} (1 - alpha_j).
//
// The default schedule is chosen so alpha_bar at the terminal step is
// below 0.01, which makes the terminal marginal indistinguishable from a
// standard normal at the tolerances the tests use.
class NoiseSchedule {
public:
    static NoiseSchedule linear(double alpha_min, double alpha_max, std::int64_t steps);
    static NoiseSchedule default_schedule() { return linear(1e-4, 0.1, 100); }

    std::int64_t steps() const { return static_cast<std::int64_t>(alpha_.size()); }
    double alpha(std::int64_t l) const;     // l in [1, steps]
    double alpha_bar(std::int64_t l) const; // l in [1, steps]
    double terminal_alpha_bar() const { return alpha_bar_.back(); }

private:
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
};

// Transformer sinusoidal embedding of the step index; d_emb must be even.
Tensor step_embedding(std::int64_t l, std::int64_t d_emb);

struct DenoiserSpec {
    std::int64_t n_nodes = 1;
    std::int64_t tau = 1;
    std::int64_t n_features = 1;
    std::int64_t d_emb = 16;
    std::int64_t hidden = 32;

    std::int64_t feature_cols() const { return tau * n_features; }
};

// Two GCN layers predicting the injected noise; the step embedding is
// concatenated to every node's features.
Params init_denoiser(const DenoiserSpec& spec, std::uint64_t seed);

Tensor predict_noise(const DenoiserSpec& spec, const Params& psi, const Tensor& x_l,
                     std::int64_t l, const Tensor& a_hat);

// One closed-form draw from q(x_l | x_0): sqrt(ab_l) x0 + sqrt(1-ab_l) eps.
Tensor forward_diffuse(const Tensor& x0, std::int64_t l, const NoiseSchedule& sched, Rng& rng);

// A single chain step q(x_l | x_{l-1}), for equivalence checks.
Tensor forward_diffuse_one_step(const Tensor& x_prev, std::int64_t l, const NoiseSchedule& sched, Rng& rng);

// Posterior mean from the predicted noise (DDPM reparameterization).
Tensor denoise_mean(const Tensor& x_l, const Tensor& eps_hat, std::int64_t l, const NoiseSchedule& sched);

// Draw x_{l-1} ~ N(mu, alpha_l I); the final step (l = 1) is noiseless.
Tensor denoise_step_from_mean(const Tensor& mu, std::int64_t l, const NoiseSchedule& sched, Rng& rng);

Tensor denoise_step(const DenoiserSpec& spec, const Params& psi, const Tensor& x_l,
                    std::int64_t l, const Tensor& a_hat, const NoiseSchedule& sched, Rng& rng);

// Noise-prediction MSE on one batch: draw l and eps, corrupt, score.
Tensor denoising_loss(const DenoiserSpec& spec, const Params& psi, const Tensor& x0,
                      const Tensor& a_hat, const NoiseSchedule& sched, Rng& rng);

// Partial noising to depth l_aug followed by the reverse chain down to
// x_0; one environment draw. Gradients flow into psi through the chain of
// means (noise draws are constants).
Tensor sample_environment(const DenoiserSpec& spec, const Params& psi, const Tensor& x,
                          const Tensor& a_hat, const NoiseSchedule& sched,
                          std::int64_t l_aug, Rng& rng);

// K environment draws of one input batch.
struct AugmentBatch {
    std::vector<Tensor> x_hat; // one per environment
    std::int64_t l_aug = 0;
};

AugmentBatch sample_environments(const DenoiserSpec& spec, const Params& psi, const Tensor& x,
                                 const Tensor& a_hat, const NoiseSchedule& sched,
                                 std::int64_t l_aug, std::int64_t k, Rng& rng);

} // namespace diffirm
