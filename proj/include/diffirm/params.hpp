#pragma once

#include <string>
#include <vector>

#include "diffirm/rng.hpp"
#include "diffirm/tensor.hpp"

namespace diffirm {

// Ordered collection of named leaf tensors; the unit of optimization,
// checkpointing and gradient readout. Order is fixed at construction time
// so optimizer state and serialized checkpoints stay aligned.
class Params {
public:
    void add(const std::string& name, Tensor t);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    std::vector<Tensor> tensors() const;
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    void zero_grad();

    // Copy of all accumulated gradients, aligned with tensors().
    std::vector<std::vector<double>> grads() const;

    // Deep copy with fresh leaves (same values).
    Params clone() const;
    void copy_values_from(const Params& other);

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

// Glorot-uniform matrix: entries ~ U(-s, s) with s = sqrt(6/(fan_in+fan_out)).
Tensor glorot_matrix(std::int64_t rows, std::int64_t cols, Rng& rng);

} // namespace diffirm
