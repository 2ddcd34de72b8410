#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffirm/graph.hpp"
#include "diffirm/tensor.hpp"

namespace diffirm {

// Graph plus node-feature time series, with sliding-window bookkeeping.
// series is T x N x F row-major; the prediction label is the target
// channel (default 0) of the tau_out future steps.
struct StDataset {
    Graph graph = Graph::single_node();
    std::vector<double> series; // T * N * F
    std::vector<std::string> feature_names;
    std::vector<std::string> timestamps;
    std::int64_t n_steps = 0;   // T
    std::int64_t n_features = 0; // F
    std::int64_t tau = 1;       // history length
    std::int64_t tau_out = 1;   // horizon
    std::int64_t target_channel = 0;

    std::int64_t n_nodes() const { return graph.n_nodes(); }
    double at(std::int64_t t, std::int64_t node, std::int64_t f) const {
        return series[static_cast<std::size_t>((t * n_nodes() + node) * n_features + f)];
    }
    double& at(std::int64_t t, std::int64_t node, std::int64_t f) {
        return series[static_cast<std::size_t>((t * n_nodes() + node) * n_features + f)];
    }
    void validate() const;
};

// One training pair: x is N x (tau*F) row-major with column index t*F + f,
// y is N x tau_out of the target channel.
struct Window {
    Tensor x;
    Tensor y;
    std::int64_t start = 0; // timestamp index of the first history step
};

struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
};

struct SplitWindows {
    std::vector<Window> train, val, test;
};

// All windows in temporal order: window i covers history [i, i+tau) and
// targets [i+tau, i+tau+tau_out).
std::vector<Window> make_windows(const StDataset& ds);

// Contiguous temporal partition; floor counts with the remainder to train.
SplitWindows temporal_split(const std::vector<Window>& windows, const SplitSpec& spec);

// Split by absolute window counts (used when a dataset prescribes step
// counts rather than fractions).
SplitWindows temporal_split_counts(const std::vector<Window>& windows,
                                   std::int64_t n_train, std::int64_t n_val, std::int64_t n_test);

// Per-channel affine transform fit on the training range only.
class Standardizer {
public:
    // Fit on series rows [0, t_end).
    static Standardizer fit(const StDataset& ds, std::int64_t t_end);
    static Standardizer identity(std::int64_t n_features);

    StDataset apply(const StDataset& ds) const;
    double destandardize_target(double v) const;
    double target_mean() const { return mean_.empty() ? 0.0 : mean_[static_cast<std::size_t>(target_)]; }
    double target_std() const { return std_.empty() ? 1.0 : std_[static_cast<std::size_t>(target_)]; }

    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& stds() const { return std_; }

private:
    std::vector<double> mean_, std_;
    std::int64_t target_ = 0;
};

// Timestamp index of the first step a window set does not touch; the
// standardizer fit boundary for leak-free normalization.
std::int64_t train_end_step(const SplitWindows& splits, std::int64_t tau, std::int64_t tau_out);

// Keep only the target channel (the autoregressive baseline's view).
StDataset drop_contextual_features(const StDataset& ds);

} // namespace diffirm
