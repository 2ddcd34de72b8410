#include "diffirm/predictor.hpp"

#include "diffirm/errors.hpp"

namespace diffirm {

Backbone backbone_from_string(const std::string& name) {
    if (name == "linear") return Backbone::linear;
    if (name == "mlp") return Backbone::mlp;
    if (name == "stgcn_lite") return Backbone::stgcn_lite;
    throw config_error("unknown backbone '" + name + "'");
}

std::string backbone_to_string(Backbone b) {
    switch (b) {
        case Backbone::linear: return "linear";
        case Backbone::mlp: return "mlp";
        case Backbone::stgcn_lite: return "stgcn_lite";
    }
    return "?";
}

Params init_params(const PredictorSpec& spec, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "predictor-init");
    Params p;
    const std::int64_t in = spec.input_cols();
    switch (spec.backbone) {
        case Backbone::linear:
            p.add("head_w", glorot_matrix(in, spec.tau_out, rng));
            p.add("head_b", Tensor::zeros({spec.tau_out}, true));
            break;
        case Backbone::mlp:
            p.add("fc1_w", glorot_matrix(in, spec.mlp_hidden, rng));
            p.add("fc1_b", Tensor::zeros({spec.mlp_hidden}, true));
            p.add("fc2_w", glorot_matrix(spec.mlp_hidden, spec.tau_out, rng));
            p.add("fc2_b", Tensor::zeros({spec.tau_out}, true));
            break;
        case Backbone::stgcn_lite: {
            const std::int64_t h = spec.gcn_hidden;
            p.add("gcn_w", glorot_matrix(spec.n_features, h, rng));
            p.add("gcn_b", Tensor::zeros({h}, true));
            for (int k = 0; k < 3; ++k) p.add("tcn_f_k" + std::to_string(k), glorot_matrix(h, h, rng));
            p.add("tcn_f_b", Tensor::zeros({h}, true));
            for (int k = 0; k < 3; ++k) p.add("tcn_g_k" + std::to_string(k), glorot_matrix(h, h, rng));
            p.add("tcn_g_b", Tensor::zeros({h}, true));
            p.add("head_w", glorot_matrix(spec.tau * h, spec.tau_out, rng));
            p.add("head_b", Tensor::zeros({spec.tau_out}, true));
            if (spec.adaptive_adjacency) {
                const std::int64_t d = spec.adaptive_dim;
                p.add("adp_w1", Tensor::scalar(1.0, true));
                p.add("adp_w2", glorot_matrix(spec.input_cols(), d, rng));
                p.add("adp_w3", glorot_matrix(d, d, rng));
                p.add("adp_w4", glorot_matrix(d, spec.input_cols(), rng));
                p.add("adp_b", Tensor::scalar(0.0, true));
            }
            break;
        }
    }
    return p;
}

namespace {

Tensor stgcn_forward(const PredictorSpec& spec, const Params& theta, const Tensor& x, const Tensor& a_hat) {
    const std::int64_t f = spec.n_features, tau = spec.tau, n = spec.n_nodes;
    if (a_hat.rows() != n) throw dimension_error("predict: adjacency does not match node count");

    Tensor adj = a_hat;
    if (spec.adaptive_adjacency) {
        if (x.rows() != n) {
            // adaptive weights are derived from the window itself; only
            // meaningful for single-window evaluation
            throw contract_error("predict: adaptive adjacency requires an unstacked window");
        }
        AdaptiveAdjacencyParams ap{theta.get("adp_w1"), theta.get("adp_w2"), theta.get("adp_w3"),
                                   theta.get("adp_w4"), theta.get("adp_b")};
        adj = combine_static_adaptive(a_hat, adaptive_adjacency(x, ap));
    }

    // spatial: one shared GCN over nodes per history step
    std::vector<Tensor> spatial;
    spatial.reserve(static_cast<std::size_t>(tau));
    for (std::int64_t t = 0; t < tau; ++t) {
        Tensor xt = slice_cols(x, t * f, (t + 1) * f);
        Tensor ht = relu(add_bias(graph_mix(adj, matmul(xt, theta.get("gcn_w")), n), theta.get("gcn_b")));
        spatial.push_back(ht);
    }

    // temporal: gated causal conv, kernel 3, over the step axis per node
    std::vector<Tensor> gated;
    gated.reserve(static_cast<std::size_t>(tau));
    for (std::int64_t t = 0; t < tau; ++t) {
        Tensor filt, gate;
        for (int k = 0; k < 3; ++k) {
            const std::int64_t src = t - k;
            if (src < 0) continue;
            Tensor fpart = matmul(spatial[static_cast<std::size_t>(src)], theta.get("tcn_f_k" + std::to_string(k)));
            Tensor gpart = matmul(spatial[static_cast<std::size_t>(src)], theta.get("tcn_g_k" + std::to_string(k)));
            filt = filt.defined() ? add(filt, fpart) : fpart;
            gate = gate.defined() ? add(gate, gpart) : gpart;
        }
        filt = add_bias(filt, theta.get("tcn_f_b"));
        gate = add_bias(gate, theta.get("tcn_g_b"));
        gated.push_back(mul(activation(filt, Act::tanh), sigmoid(gate)));
    }

    Tensor hidden = concat_cols(gated);
    return add_bias(matmul(hidden, theta.get("head_w")), theta.get("head_b"));
}

} // namespace

Tensor predict_batch(const PredictorSpec& spec, const Params& theta, const Tensor& x, const Tensor& a_hat) {
    if (x.cols() != spec.input_cols()) {
        throw dimension_error("predict: window has " + std::to_string(x.cols()) + " columns, spec expects " +
                              std::to_string(spec.input_cols()));
    }
    if (x.rows() % spec.n_nodes != 0) {
        throw dimension_error("predict: row count is not a multiple of the node count");
    }
    switch (spec.backbone) {
        case Backbone::linear:
            return add_bias(matmul(x, theta.get("head_w")), theta.get("head_b"));
        case Backbone::mlp: {
            Tensor h = relu(add_bias(matmul(x, theta.get("fc1_w")), theta.get("fc1_b")));
            return add_bias(matmul(h, theta.get("fc2_w")), theta.get("fc2_b"));
        }
        case Backbone::stgcn_lite:
            return stgcn_forward(spec, theta, x, a_hat);
    }
    throw contract_error("predict: unreachable backbone");
}

Tensor predict(const PredictorSpec& spec, const Params& theta, const Tensor& x, const Tensor& a_hat) {
    if (x.rows() != spec.n_nodes) {
        throw dimension_error("predict: expected one window of " + std::to_string(spec.n_nodes) + " nodes");
    }
    return predict_batch(spec, theta, x, a_hat);
}

} // namespace diffirm
