#pragma once

#include <cstdint>
#include <string>

#include "diffirm/graph.hpp"
#include "diffirm/params.hpp"
#include "diffirm/tensor.hpp"

namespace diffirm {

enum class Backbone { linear, mlp, stgcn_lite };

Backbone backbone_from_string(const std::string& name);
std::string backbone_to_string(Backbone b);

// Shape contract of the prediction model f_theta. Window tensors are
// N x (tau*F) with column index t*F + f; outputs are always N x tau_out.
struct PredictorSpec {
    Backbone backbone = Backbone::linear;
    std::int64_t n_nodes = 1;
    std::int64_t tau = 1;
    std::int64_t tau_out = 1;
    std::int64_t n_features = 1;
    std::int64_t mlp_hidden = 32;
    std::int64_t gcn_hidden = 16;
    bool adaptive_adjacency = false;
    std::int64_t adaptive_dim = 4;

    std::int64_t input_cols() const { return tau * n_features; }
};

// Glorot-uniform weights, zero biases; identical parameters for identical
// seeds.
Params init_params(const PredictorSpec& spec, std::uint64_t seed);

// Forward pass on a stack of windows: x is (B*N) x (tau*F), a_hat is the
// normalized adjacency applied per N-row block. Returns (B*N) x tau_out.
Tensor predict_batch(const PredictorSpec& spec, const Params& theta, const Tensor& x, const Tensor& a_hat);

// Single window, N x (tau*F) -> N x tau_out.
Tensor predict(const PredictorSpec& spec, const Params& theta, const Tensor& x, const Tensor& a_hat);

} // namespace diffirm
