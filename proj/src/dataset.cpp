#include "diffirm/dataset.hpp"

#include <cmath>
#include <string>

namespace diffirm {

void StDataset::validate() const {
    if (n_features < 1) throw contract_error("dataset: need at least one feature channel");
    if (target_channel < 0 || target_channel >= n_features) {
        throw contract_error("dataset: target channel out of range");
    }
    if (tau < 1 || tau_out < 1) throw contract_error("dataset: tau and tau_out must be positive");
    if (n_steps < tau + tau_out) {
        throw contract_error("dataset: need T >= tau + tau_out, got T=" + std::to_string(n_steps));
    }
    const auto expected = static_cast<std::size_t>(n_steps * n_nodes() * n_features);
    if (series.size() != expected) throw contract_error("dataset: series length does not match T*N*F");
    for (double v : series) {
        if (!std::isfinite(v)) throw contract_error("dataset: non-finite series value");
    }
}

std::vector<Window> make_windows(const StDataset& ds) {
    ds.validate();
    const std::int64_t n = ds.n_nodes(), f = ds.n_features, tau = ds.tau, h = ds.tau_out;
    const std::int64_t count = ds.n_steps - tau - h + 1;
    std::vector<Window> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t w = 0; w < count; ++w) {
        std::vector<double> x(static_cast<std::size_t>(n * tau * f));
        std::vector<double> y(static_cast<std::size_t>(n * h));
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t t = 0; t < tau; ++t)
                for (std::int64_t c = 0; c < f; ++c)
                    x[static_cast<std::size_t>(i * tau * f + t * f + c)] = ds.at(w + t, i, c);
            for (std::int64_t t = 0; t < h; ++t)
                y[static_cast<std::size_t>(i * h + t)] = ds.at(w + tau + t, i, ds.target_channel);
        }
        Window win;
        win.x = Tensor::from_data({n, tau * f}, std::move(x), false);
        win.y = Tensor::from_data({n, h}, std::move(y), false);
        win.start = w;
        out.push_back(std::move(win));
    }
    return out;
}

SplitWindows temporal_split(const std::vector<Window>& windows, const SplitSpec& spec) {
    const double s = spec.train_frac + spec.val_frac + spec.test_frac;
    if (spec.train_frac < 0 || spec.val_frac < 0 || spec.test_frac < 0 || std::abs(s - 1.0) > 1e-9) {
        throw contract_error("temporal_split: fractions must be nonnegative and sum to 1");
    }
    const auto w = static_cast<std::int64_t>(windows.size());
    std::int64_t n_val = static_cast<std::int64_t>(std::floor(spec.val_frac * static_cast<double>(w)));
    std::int64_t n_test = static_cast<std::int64_t>(std::floor(spec.test_frac * static_cast<double>(w)));
    std::int64_t n_train = w - n_val - n_test; // floor remainder goes to train
    return temporal_split_counts(windows, n_train, n_val, n_test);
}

SplitWindows temporal_split_counts(const std::vector<Window>& windows,
                                   std::int64_t n_train, std::int64_t n_val, std::int64_t n_test) {
    const auto w = static_cast<std::int64_t>(windows.size());
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw contract_error("temporal_split: every partition must be nonempty");
    }
    if (n_train + n_val + n_test != w) {
        throw contract_error("temporal_split: counts must cover all " + std::to_string(w) + " windows");
    }
    SplitWindows out;
    out.train.assign(windows.begin(), windows.begin() + n_train);
    out.val.assign(windows.begin() + n_train, windows.begin() + n_train + n_val);
    out.test.assign(windows.begin() + n_train + n_val, windows.end());
    return out;
}

Standardizer Standardizer::fit(const StDataset& ds, std::int64_t t_end) {
    if (t_end < 1 || t_end > ds.n_steps) throw contract_error("standardizer: fit range out of bounds");
    Standardizer s;
    s.target_ = ds.target_channel;
    const std::int64_t f = ds.n_features, n = ds.n_nodes();
    s.mean_.assign(static_cast<std::size_t>(f), 0.0);
    s.std_.assign(static_cast<std::size_t>(f), 1.0);
    const double count = static_cast<double>(t_end * n);
    for (std::int64_t c = 0; c < f; ++c) {
        double m = 0.0;
        for (std::int64_t t = 0; t < t_end; ++t)
            for (std::int64_t i = 0; i < n; ++i) m += ds.at(t, i, c);
        m /= count;
        double var = 0.0;
        for (std::int64_t t = 0; t < t_end; ++t)
            for (std::int64_t i = 0; i < n; ++i) {
                const double d = ds.at(t, i, c) - m;
                var += d * d;
            }
        var /= count;
        s.mean_[static_cast<std::size_t>(c)] = m;
        s.std_[static_cast<std::size_t>(c)] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(std::int64_t n_features) {
    Standardizer s;
    s.mean_.assign(static_cast<std::size_t>(n_features), 0.0);
    s.std_.assign(static_cast<std::size_t>(n_features), 1.0);
    return s;
}

StDataset Standardizer::apply(const StDataset& ds) const {
    if (static_cast<std::int64_t>(mean_.size()) != ds.n_features) {
        throw dimension_error("standardizer: channel count mismatch");
    }
    StDataset out = ds;
    for (std::int64_t t = 0; t < ds.n_steps; ++t)
        for (std::int64_t i = 0; i < ds.n_nodes(); ++i)
            for (std::int64_t c = 0; c < ds.n_features; ++c) {
                const auto cc = static_cast<std::size_t>(c);
                out.at(t, i, c) = (ds.at(t, i, c) - mean_[cc]) / std_[cc];
            }
    return out;
}

double Standardizer::destandardize_target(double v) const {
    return v * target_std() + target_mean();
}

std::int64_t train_end_step(const SplitWindows& splits, std::int64_t tau, std::int64_t tau_out) {
    if (splits.train.empty()) throw contract_error("train_end_step: empty train split");
    return splits.train.back().start + tau + tau_out;
}

StDataset drop_contextual_features(const StDataset& ds) {
    StDataset out;
    out.graph = ds.graph;
    out.n_steps = ds.n_steps;
    out.n_features = 1;
    out.tau = ds.tau;
    out.tau_out = ds.tau_out;
    out.target_channel = 0;
    out.timestamps = ds.timestamps;
    out.feature_names = {ds.feature_names.empty() ? std::string("f_0")
                                                  : ds.feature_names[static_cast<std::size_t>(ds.target_channel)]};
    out.series.resize(static_cast<std::size_t>(ds.n_steps * ds.n_nodes()));
    for (std::int64_t t = 0; t < ds.n_steps; ++t)
        for (std::int64_t i = 0; i < ds.n_nodes(); ++i)
            out.at(t, i, 0) = ds.at(t, i, ds.target_channel);
    return out;
}

} // namespace diffirm
