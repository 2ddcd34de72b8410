#include "diffirm/causal_mask.hpp"

#include <string>

#include "diffirm/errors.hpp"

namespace diffirm {

Params init_mask_net(const CausalMaskSpec& spec, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "mask-init");
    Params p;
    p.add("m1_w", glorot_matrix(spec.feature_cols(), spec.hidden, rng));
    p.add("m1_b", Tensor::zeros({spec.hidden}, true));
    p.add("m2_w", glorot_matrix(spec.hidden, spec.feature_cols(), rng));
    p.add("m2_b", Tensor::zeros({spec.feature_cols()}, true));
    return p;
}

Tensor generate_mask(const CausalMaskSpec& spec, const Params& phi, const Tensor& x) {
    if (x.cols() != spec.feature_cols()) {
        throw dimension_error("generate_mask: expected " + std::to_string(spec.feature_cols()) + " columns, got " +
                              std::to_string(x.cols()));
    }
    Tensor h = relu(add_bias(matmul(x, phi.get("m1_w")), phi.get("m1_b")));
    return sigmoid(add_bias(matmul(h, phi.get("m2_w")), phi.get("m2_b")));
}

Tensor combine(const Tensor& x, const Tensor& x_hat, const Tensor& m_cau) {
    if (x.shape() != x_hat.shape() || x.shape() != m_cau.shape()) {
        throw dimension_error("combine: the three operands must share one shape");
    }
    for (double v : m_cau.data()) {
        if (v < 0.0 || v > 1.0) throw contract_error("combine: mask entries must lie in [0, 1]");
    }
    Tensor keep = mul(x, m_cau);
    Tensor ones = Tensor::full(m_cau.shape(), 1.0, false);
    Tensor swap = mul(x_hat, sub(ones, m_cau));
    return add(keep, swap);
}

Tensor ratio_regularizer(const Tensor& m_cau, double target_ratio) {
    if (!(target_ratio > 0.0 && target_ratio < 1.0)) {
        throw contract_error("ratio_regularizer: target ratio must lie in (0, 1)");
    }
    Tensor dev = add_const(mean(m_cau), -target_ratio);
    return mul(dev, dev);
}

double MaskReport::feature_mean(std::int64_t f) const {
    double acc = 0.0;
    for (std::int64_t t = 0; t < tau; ++t) acc += cell(f, t);
    return acc / static_cast<double>(tau);
}

MaskReport mask_report(const std::vector<Tensor>& mask_samples, std::int64_t tau,
                       std::int64_t n_features, std::vector<std::string> feature_names) {
    if (mask_samples.empty()) throw contract_error("mask_report: no samples");
    MaskReport rep;
    rep.tau = tau;
    rep.n_features = n_features;
    rep.feature_names = std::move(feature_names);
    if (rep.feature_names.empty()) {
        for (std::int64_t f = 0; f < n_features; ++f) rep.feature_names.push_back("f_" + std::to_string(f));
    }
    rep.values.assign(static_cast<std::size_t>(n_features * tau), 0.0);
    std::vector<double> counts(rep.values.size(), 0.0);
    const std::int64_t cols = tau * n_features;
    for (const auto& m : mask_samples) {
        if (m.cols() != cols) throw dimension_error("mask_report: sample column count mismatch");
        const double* p = m.data().data();
        for (std::int64_t r = 0; r < m.rows(); ++r)
            for (std::int64_t t = 0; t < tau; ++t)
                for (std::int64_t f = 0; f < n_features; ++f) {
                    const auto cell = static_cast<std::size_t>(f * tau + t);
                    rep.values[cell] += p[r * cols + t * n_features + f];
                    counts[cell] += 1.0;
                }
    }
    for (std::size_t i = 0; i < rep.values.size(); ++i) rep.values[i] /= counts[i];
    return rep;
}

} // namespace diffirm
