#include "diffirm/params.hpp"

#include <cmath>

#include "diffirm/errors.hpp"

namespace diffirm {

void Params::add(const std::string& name, Tensor t) {
    if (has(name)) throw contract_error("params: duplicate name '" + name + "'");
    items_.emplace_back(name, std::move(t));
}

Tensor& Params::get(const std::string& name) {
    for (auto& [n, t] : items_)
        if (n == name) return t;
    throw contract_error("params: unknown name '" + name + "'");
}

const Tensor& Params::get(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return t;
    throw contract_error("params: unknown name '" + name + "'");
}

bool Params::has(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return true;
    return false;
}

std::vector<Tensor> Params::tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& [n, t] : items_) out.push_back(t);
    return out;
}

void Params::zero_grad() {
    for (auto& [n, t] : items_) t.zero_grad();
}

std::vector<std::vector<double>> Params::grads() const {
    std::vector<std::vector<double>> out;
    out.reserve(items_.size());
    for (const auto& [n, t] : items_) out.emplace_back(t.grad().begin(), t.grad().end());
    return out;
}

Params Params::clone() const {
    Params out;
    for (const auto& [n, t] : items_) {
        out.add(n, Tensor::from_data(t.shape(), std::vector<double>(t.data().begin(), t.data().end()),
                                     t.requires_grad()));
    }
    return out;
}

void Params::copy_values_from(const Params& other) {
    if (other.size() != size()) throw dimension_error("params: size mismatch in copy_values_from");
    for (std::size_t i = 0; i < items_.size(); ++i) {
        items_[i].second.set_data(other.items_[i].second.data());
    }
}

Tensor glorot_matrix(std::int64_t rows, std::int64_t cols, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> data(static_cast<std::size_t>(rows * cols));
    for (auto& v : data) v = rng.uniform(-s, s);
    return Tensor::from_data({rows, cols}, std::move(data), true);
}

} // namespace diffirm
