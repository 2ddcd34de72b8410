#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "diffirm/tensor.hpp"

namespace diffirm {

// Undirected graph as a dense 0/1 adjacency. Self-loops are rejected on
// input; normalization adds them.
class Graph {
public:
    Graph(std::int64_t n_nodes, const std::vector<std::pair<std::int64_t, std::int64_t>>& edges);

    static Graph single_node() { return Graph(1, {}); }
    static Graph ring(std::int64_t n_nodes);

    std::int64_t n_nodes() const { return n_; }
    bool has_edge(std::int64_t i, std::int64_t j) const;
    const std::vector<double>& adjacency() const { return adj_; }
    std::vector<std::pair<std::int64_t, std::int64_t>> edge_list() const; // i < j, sorted

private:
    std::int64_t n_;
    std::vector<double> adj_; // row-major N x N
};

// Symmetric normalization D^{-1/2} (A + I) D^{-1/2} with D the degree
// matrix of A + I. Constant tensor (no gradient).
Tensor normalize_adjacency(const Graph& g);

// One GCN propagation step act(A_hat * h * w). h may be a stacked
// (B*N) x d_in batch; a_hat is applied per N-row block.
Tensor gcn_layer(const Tensor& h, const Tensor& a_hat, const Tensor& w, Act act);
Tensor gcn_layer_linear(const Tensor& h, const Tensor& a_hat, const Tensor& w);

struct AdaptiveAdjacencyParams {
    Tensor w1; // scalar output scale
    Tensor w2; // F x d
    Tensor w3; // d x d
    Tensor w4; // d x F
    Tensor b;  // scalar bias inside the activation
};

// A_adp = w1 * relu((X w2) w3 (w4 X^T)^T + b); nonnegative N x N weights.
Tensor adaptive_adjacency(const Tensor& x, const AdaptiveAdjacencyParams& params);

// Optional additive use: A_hat + A_adp row-normalized below spectral
// radius one. Keeps the static structure and lets data sharpen it.
Tensor combine_static_adaptive(const Tensor& a_hat, const Tensor& a_adp);

} // namespace diffirm
