#include "diffirm/gradcheck_suite.hpp"

#include <cmath>
#include <functional>

#include "diffirm/causal_mask.hpp"
#include "diffirm/diffusion.hpp"
#include "diffirm/graph.hpp"
#include "diffirm/predictor.hpp"
#include "diffirm/rng.hpp"
#include "diffirm/tensor.hpp"

namespace diffirm {

namespace {

constexpr double kStep = 1e-5;

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.5, double hi = 1.5) {
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(data), false);
}

// Reduce to a scalar with fixed random weights so the pullback is not a
// constant vector.
Tensor weighted_sum(const Tensor& t, const Tensor& w) { return sum(mul(t, w)); }

using Fn = std::function<Tensor(const Tensor&)>;

double check(const Fn& f, const Tensor& x) { return grad_check(f, x, kStep); }

double check_params(const Params& proto, const std::string& name,
                    const std::function<Tensor(const Params&)>& loss) {
    const Tensor& target = proto.get(name);
    Fn f = [&](const Tensor& cand) {
        Params p = proto.clone();
        p.get(name) = cand;
        return loss(p);
    };
    return grad_check(f, target, kStep);
}

Graph small_graph() { return Graph(3, {{0, 1}, {1, 2}}); }

} // namespace

std::vector<OpCheck> run_gradcheck_suite(int trials, std::uint64_t seed) {
    std::vector<OpCheck> results;
    auto record = [&](const std::string& name, const std::function<double(Rng&)>& one_trial) {
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            Rng rng = Rng::stream(seed, name).split(static_cast<std::uint64_t>(t));
            worst = std::max(worst, one_trial(rng));
        }
        results.push_back({name, worst});
    };

    record("matmul", [](Rng& rng) {
        const std::int64_t m = 2 + static_cast<std::int64_t>(rng.below(3));
        const std::int64_t k = 1 + static_cast<std::int64_t>(rng.below(3));
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.below(3));
        Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
        Tensor w = random_tensor({m, n}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(matmul(x, b), w); }, a);
        double e2 = check([&](const Tensor& x) { return weighted_sum(matmul(a, x), w); }, b);
        return std::max(e1, e2);
    });

    record("elementwise_add", [](Rng& rng) {
        Tensor a = random_tensor({3, 2}, rng), b = random_tensor({3, 2}, rng), w = random_tensor({3, 2}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(add(x, b), w); }, a);
        double e2 = check([&](const Tensor& x) { return weighted_sum(add(a, x), w); }, b);
        return std::max(e1, e2);
    });

    record("elementwise_sub", [](Rng& rng) {
        Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng), w = random_tensor({2, 3}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(sub(x, b), w); }, a);
        double e2 = check([&](const Tensor& x) { return weighted_sum(sub(a, x), w); }, b);
        return std::max(e1, e2);
    });

    record("elementwise_mul", [](Rng& rng) {
        Tensor a = random_tensor({4}, rng), b = random_tensor({4}, rng), w = random_tensor({4}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(mul(x, b), w); }, a);
        double e2 = check([&](const Tensor& x) { return weighted_sum(mul(a, x), w); }, b);
        return std::max(e1, e2);
    });

    record("scalar_broadcast", [](Rng& rng) {
        Tensor a = random_tensor({3, 3}, rng), w = random_tensor({3, 3}, rng);
        Tensor s = random_tensor({1}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(mul(a, x), w); }, s);
        double e2 = check([&](const Tensor& x) { return weighted_sum(add(x, s), w); }, a);
        return std::max(e1, e2);
    });

    record("scale_add_const", [](Rng& rng) {
        Tensor a = random_tensor({5}, rng), w = random_tensor({5}, rng);
        const double c = rng.uniform(-2.0, 2.0);
        return check([&](const Tensor& x) { return weighted_sum(add_const(scale(x, c), 0.25), w); }, a);
    });

    record("relu", [](Rng& rng) {
        // keep entries away from the kink so the finite difference is valid
        Tensor a = random_tensor({6}, rng);
        std::vector<double> d(a.data().begin(), a.data().end());
        for (auto& v : d) if (std::abs(v) < 0.05) v = 0.1;
        Tensor x0 = Tensor::from_data({6}, d, false);
        Tensor w = random_tensor({6}, rng);
        return check([&](const Tensor& x) { return weighted_sum(relu(x), w); }, x0);
    });

    record("sigmoid", [](Rng& rng) {
        Tensor a = random_tensor({2, 4}, rng), w = random_tensor({2, 4}, rng);
        return check([&](const Tensor& x) { return weighted_sum(sigmoid(x), w); }, a);
    });

    record("tanh", [](Rng& rng) {
        Tensor a = random_tensor({7}, rng), w = random_tensor({7}, rng);
        return check([&](const Tensor& x) { return weighted_sum(activation(x, Act::tanh), w); }, a);
    });

    record("mse_loss", [](Rng& rng) {
        Tensor p = random_tensor({3, 2}, rng), t = random_tensor({3, 2}, rng);
        double e1 = check([&](const Tensor& x) { return mse_loss(x, t); }, p);
        double e2 = check([&](const Tensor& x) { return mse_loss(p, x); }, t);
        return std::max(e1, e2);
    });

    record("sum_mean", [](Rng& rng) {
        Tensor a = random_tensor({4, 2}, rng);
        double e1 = check([&](const Tensor& x) { return sum(x); }, a);
        double e2 = check([&](const Tensor& x) { return mean(x); }, a);
        return std::max(e1, e2);
    });

    record("transpose", [](Rng& rng) {
        Tensor a = random_tensor({3, 4}, rng), w = random_tensor({4, 3}, rng);
        return check([&](const Tensor& x) { return weighted_sum(transpose(x), w); }, a);
    });

    record("slice_concat", [](Rng& rng) {
        Tensor a = random_tensor({3, 5}, rng), w = random_tensor({3, 7}, rng);
        return check([&](const Tensor& x) {
            Tensor left = slice_cols(x, 0, 2);
            Tensor right = slice_cols(x, 2, 5);
            return weighted_sum(concat_cols({right, left}), w);
        }, a);
    });

    record("add_bias", [](Rng& rng) {
        Tensor a = random_tensor({4, 3}, rng), b = random_tensor({3}, rng), w = random_tensor({4, 3}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(add_bias(x, b), w); }, a);
        double e2 = check([&](const Tensor& x) { return weighted_sum(add_bias(a, x), w); }, b);
        return std::max(e1, e2);
    });

    record("broadcast_rows", [](Rng& rng) {
        Tensor v = random_tensor({4}, rng), w = random_tensor({3, 4}, rng);
        return check([&](const Tensor& x) { return weighted_sum(broadcast_rows(x, 3), w); }, v);
    });

    record("graph_mix", [](Rng& rng) {
        Graph g = small_graph();
        Tensor a_hat = normalize_adjacency(g);
        Tensor x = random_tensor({6, 2}, rng), w = random_tensor({6, 2}, rng); // batch of 2 windows
        Tensor adj_free = random_tensor({3, 3}, rng);
        double e1 = check([&](const Tensor& t) { return weighted_sum(graph_mix(a_hat, t, 3), w); }, x);
        double e2 = check([&](const Tensor& t) { return weighted_sum(graph_mix(t, x, 3), w); }, adj_free);
        return std::max(e1, e2);
    });

    record("row_normalize_plus_one", [](Rng& rng) {
        Tensor a = random_tensor({3, 3}, rng, 0.0, 2.0), w = random_tensor({3, 3}, rng);
        return check([&](const Tensor& x) { return weighted_sum(row_normalize_plus_one(x), w); }, a);
    });

    record("gcn_layer", [](Rng& rng) {
        Graph g = small_graph();
        Tensor a_hat = normalize_adjacency(g);
        Tensor h = random_tensor({3, 2}, rng), wt = random_tensor({2, 3}, rng), w = random_tensor({3, 3}, rng);
        double e1 = check([&](const Tensor& x) { return weighted_sum(gcn_layer(x, a_hat, wt, Act::tanh), w); }, h);
        double e2 = check([&](const Tensor& x) { return weighted_sum(gcn_layer(h, a_hat, x, Act::tanh), w); }, wt);
        return std::max(e1, e2);
    });

    record("adaptive_adjacency", [](Rng& rng) {
        Tensor x = random_tensor({3, 2}, rng), w = random_tensor({3, 3}, rng);
        AdaptiveAdjacencyParams ap;
        ap.w1 = random_tensor({1}, rng, 0.5, 1.5);
        ap.w2 = random_tensor({2, 2}, rng);
        ap.w3 = random_tensor({2, 2}, rng);
        ap.w4 = random_tensor({2, 2}, rng);
        ap.b = random_tensor({1}, rng, 0.2, 0.8);
        return check([&](const Tensor& t) {
            AdaptiveAdjacencyParams p = ap;
            p.w2 = t;
            return weighted_sum(adaptive_adjacency(x, p), w);
        }, ap.w2);
    });

    record("mask_net", [](Rng& rng) {
        CausalMaskSpec spec{.tau = 2, .n_features = 2, .hidden = 6};
        Params phi = init_mask_net(spec, rng.next_u64());
        Tensor x = random_tensor({3, 4}, rng), w = random_tensor({3, 4}, rng);
        auto loss = [&](const Params& p) { return weighted_sum(generate_mask(spec, p, x), w); };
        double worst = check([&](const Tensor& t) { return weighted_sum(generate_mask(spec, phi, t), w); }, x);
        worst = std::max(worst, check_params(phi, "m1_w", loss));
        worst = std::max(worst, check_params(phi, "m2_b", loss));
        return worst;
    });

    record("combine", [](Rng& rng) {
        Tensor x = random_tensor({2, 3}, rng), xh = random_tensor({2, 3}, rng);
        Tensor m = random_tensor({2, 3}, rng, 0.05, 0.95), w = random_tensor({2, 3}, rng);
        double e1 = check([&](const Tensor& t) { return weighted_sum(combine(t, xh, m), w); }, x);
        double e2 = check([&](const Tensor& t) { return weighted_sum(combine(x, t, m), w); }, xh);
        double e3 = check([&](const Tensor& t) { return weighted_sum(combine(x, xh, t), w); }, m);
        return std::max({e1, e2, e3});
    });

    record("ratio_regularizer", [](Rng& rng) {
        Tensor m = random_tensor({3, 4}, rng, 0.1, 0.9);
        return check([&](const Tensor& t) { return ratio_regularizer(t, 0.4); }, m);
    });

    // full backbones, d(loss)/d(input) and d(loss)/d(weights)
    auto backbone_entry = [&](const std::string& name, Backbone kind) {
        record("backbone_" + name, [kind](Rng& rng) {
            PredictorSpec spec;
            spec.backbone = kind;
            spec.n_nodes = 3;
            spec.tau = 4;
            spec.n_features = 2;
            spec.tau_out = 2;
            spec.mlp_hidden = 5;
            spec.gcn_hidden = 4;
            Params theta = init_params(spec, rng.next_u64());
            Graph g = small_graph();
            Tensor a_hat = normalize_adjacency(g);
            Tensor x = random_tensor({3, spec.input_cols()}, rng);
            Tensor y = random_tensor({3, spec.tau_out}, rng);
            auto loss = [&](const Params& p) { return mse_loss(predict(spec, p, x, a_hat), y); };
            double worst = grad_check([&](const Tensor& t) {
                return mse_loss(predict(spec, theta, t, a_hat), y);
            }, x, kStep);
            for (const auto& [pname, tensor] : theta.items()) {
                worst = std::max(worst, check_params(theta, pname, loss));
            }
            return worst;
        });
    };
    backbone_entry("linear", Backbone::linear);
    backbone_entry("mlp", Backbone::mlp);
    backbone_entry("stgcn_lite", Backbone::stgcn_lite);

    record("denoiser_chain", [](Rng& rng) {
        DenoiserSpec spec{.n_nodes = 3, .tau = 2, .n_features = 2, .d_emb = 4, .hidden = 5};
        Params psi = init_denoiser(spec, rng.next_u64());
        Graph g = small_graph();
        Tensor a_hat = normalize_adjacency(g);
        Tensor x = random_tensor({3, spec.feature_cols()}, rng);
        Tensor w = random_tensor({3, spec.feature_cols()}, rng);
        NoiseSchedule sched = NoiseSchedule::linear(0.01, 0.1, 6);
        const std::uint64_t noise_seed = rng.next_u64();
        auto loss = [&](const Params& p) {
            Rng noise = Rng::stream(noise_seed, "chain"); // same draws every call
            return weighted_sum(sample_environment(spec, p, x, a_hat, sched, 4, noise), w);
        };
        double worst = grad_check([&](const Tensor& t) {
            Rng noise = Rng::stream(noise_seed, "chain");
            return weighted_sum(sample_environment(spec, psi, t, a_hat, sched, 4, noise), w);
        }, x, kStep);
        for (const auto& [pname, tensor] : psi.items()) {
            worst = std::max(worst, check_params(psi, pname, loss));
        }
        return worst;
    });

    return results;
}

bool gradcheck_suite_passed(const std::vector<OpCheck>& results, double tol) {
    for (const auto& r : results)
        if (!(r.max_error < tol)) return false;
    return true;
}

} // namespace diffirm
