#include "diffirm/graph.hpp"

#include <cmath>
#include <string>

namespace diffirm {

Graph::Graph(std::int64_t n_nodes, const std::vector<std::pair<std::int64_t, std::int64_t>>& edges)
    : n_(n_nodes), adj_(static_cast<std::size_t>(n_nodes * n_nodes), 0.0) {
    if (n_nodes < 1) throw contract_error("graph: need at least one node");
    for (auto [i, j] : edges) {
        if (i < 0 || i >= n_ || j < 0 || j >= n_) {
            throw contract_error("graph: edge (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
        }
        if (i == j) throw contract_error("graph: self-loop on node " + std::to_string(i) + " not allowed on input");
        adj_[static_cast<std::size_t>(i * n_ + j)] = 1.0;
        adj_[static_cast<std::size_t>(j * n_ + i)] = 1.0;
    }
}

Graph Graph::ring(std::int64_t n_nodes) {
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    if (n_nodes == 2) {
        edges.push_back({0, 1});
    } else if (n_nodes > 2) {
        for (std::int64_t i = 0; i < n_nodes; ++i) edges.push_back({i, (i + 1) % n_nodes});
    }
    return Graph(n_nodes, edges);
}

bool Graph::has_edge(std::int64_t i, std::int64_t j) const {
    return adj_[static_cast<std::size_t>(i * n_ + j)] != 0.0;
}

std::vector<std::pair<std::int64_t, std::int64_t>> Graph::edge_list() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (std::int64_t i = 0; i < n_; ++i)
        for (std::int64_t j = i + 1; j < n_; ++j)
            if (has_edge(i, j)) out.push_back({i, j});
    return out;
}

Tensor normalize_adjacency(const Graph& g) {
    const std::int64_t n = g.n_nodes();
    const auto& a = g.adjacency();
    // validate symmetry and 0/1 entries; the Graph constructor guarantees
    // both, but adjacency data may also arrive through ingestion paths
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            const double v = a[static_cast<std::size_t>(i * n + j)];
            if (v != 0.0 && v != 1.0) throw contract_error("normalize_adjacency: entries must be 0 or 1");
            if (v != a[static_cast<std::size_t>(j * n + i)]) {
                throw contract_error("normalize_adjacency: adjacency must be symmetric");
            }
        }
        if (a[static_cast<std::size_t>(i * n + i)] != 0.0) {
            throw contract_error("normalize_adjacency: input diagonal must be zero");
        }
    }
    std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        double d = 1.0; // self-loop
        for (std::int64_t j = 0; j < n; ++j) d += a[static_cast<std::size_t>(i * n + j)];
        deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(d);
    }
    std::vector<double> out(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            const double aij = (i == j) ? 1.0 : a[static_cast<std::size_t>(i * n + j)];
            out[static_cast<std::size_t>(i * n + j)] =
                deg[static_cast<std::size_t>(i)] * aij * deg[static_cast<std::size_t>(j)];
        }
    return Tensor::from_data({n, n}, std::move(out), false);
}

Tensor gcn_layer_linear(const Tensor& h, const Tensor& a_hat, const Tensor& w) {
    return graph_mix(a_hat, matmul(h, w), a_hat.rows());
}

Tensor gcn_layer(const Tensor& h, const Tensor& a_hat, const Tensor& w, Act act) {
    return activation(gcn_layer_linear(h, a_hat, w), act);
}

Tensor adaptive_adjacency(const Tensor& x, const AdaptiveAdjacencyParams& params) {
    // (X w2) w3 gives N x d, (w4 X^T)^T = X w4^T gives N x d
    Tensor left = matmul(matmul(x, params.w2), params.w3);
    Tensor right = matmul(x, transpose(params.w4));
    Tensor pre = add(matmul(left, transpose(right)), params.b);
    return mul(params.w1, relu(pre));
}

Tensor combine_static_adaptive(const Tensor& a_hat, const Tensor& a_adp) {
    return add(a_hat, row_normalize_plus_one(a_adp));
}

} // namespace diffirm
