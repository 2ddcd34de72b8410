#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffirm/params.hpp"
#include "diffirm/tensor.hpp"

namespace diffirm {

// Two-layer perceptron shared across nodes; sigmoid output keeps every
// mask entry strictly inside (0, 1).
struct CausalMaskSpec {
    std::int64_t tau = 1;
    std::int64_t n_features = 1;
    std::int64_t hidden = 32;

    std::int64_t feature_cols() const { return tau * n_features; }
};

Params init_mask_net(const CausalMaskSpec& spec, std::uint64_t seed);

// Deterministic soft mask in (0, 1), one value per window entry. x is
// (B*N) x (tau*F); weights are shared across nodes.
Tensor generate_mask(const CausalMaskSpec& spec, const Params& phi, const Tensor& x);

// x_tilde = x . m + x_hat . (1 - m); keeps original values where the mask
// says causal and augmented values elsewhere.
Tensor combine(const Tensor& x, const Tensor& x_hat, const Tensor& m_cau);

// Squared deviation of the mask mean from the target causal ratio.
Tensor ratio_regularizer(const Tensor& m_cau, double target_ratio);

// Mean mask value per (feature, lag) cell, aggregated over nodes and
// windows; the plot-ready causal-certainty table.
struct MaskReport {
    std::int64_t tau = 0;
    std::int64_t n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<double> values; // F x tau row-major

    double cell(std::int64_t f, std::int64_t t) const {
        return values[static_cast<std::size_t>(f * tau + t)];
    }
    // Mean over all lags of one feature row.
    double feature_mean(std::int64_t f) const;
};

MaskReport mask_report(const std::vector<Tensor>& mask_samples, std::int64_t tau,
                       std::int64_t n_features, std::vector<std::string> feature_names);

} // namespace diffirm
