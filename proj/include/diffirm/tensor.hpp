#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "diffirm/errors.hpp"

namespace diffirm {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode;

// Dense double-precision tensor participating in reverse-mode
// differentiation. Copying a Tensor copies the handle, not the buffer;
// buffers are immutable once built except the grad accumulator.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::int64_t numel() const;
    std::int64_t rows() const; // 2-D only
    std::int64_t cols() const; // 2-D only
    bool requires_grad() const;
    bool is_leaf() const;

    std::span<const double> data() const;
    double value() const;                    // scalar only
    double at(std::int64_t r, std::int64_t c) const; // 2-D only

    // Gradient accumulated by backward(); zeros if backward never reached it.
    std::span<const double> grad() const;
    void zero_grad();

    // In-place overwrite of a leaf's buffer (parameter loading). Rejects
    // non-leaf tensors and non-finite values.
    void set_data(std::span<const double> values);

    TensorNode* node() const { return node_.get(); }

private:
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
    std::shared_ptr<TensorNode> node_;

    friend Tensor make_node(Shape shape, std::vector<double> data,
                            std::vector<Tensor> parents,
                            std::function<void(TensorNode&)> backward_fn);
    friend void backward(const Tensor& loss);
    friend struct TensorNode;
};

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until first accumulation
    bool requires_grad = false;
    bool consumed = false; // a backward pass already ran through this node
    std::uint64_t seq = 0; // creation order; parents always precede children
    std::vector<Tensor> parents;
    std::function<void(TensorNode&)> backward_fn; // empty for leaves

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    void ensure_grad() { if (grad.empty()) grad.assign(data.size(), 0.0); }
};

enum class ElemOp { add, sub, mul };
enum class Act { relu, sigmoid, tanh };

// --- primitive ops -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// Same-shape elementwise op; the only broadcast allowed is a one-element
// operand on either side.
Tensor elementwise(const Tensor& a, const Tensor& b, ElemOp op);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);

Tensor activation(const Tensor& x, Act kind);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor mse_loss(const Tensor& pred, const Tensor& target);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor transpose(const Tensor& a); // 2-D

// Column range [c0, c1) of a 2-D tensor.
Tensor slice_cols(const Tensor& a, std::int64_t c0, std::int64_t c1);
Tensor concat_cols(const std::vector<Tensor>& parts);

// rows x cols + row-vector bias.
Tensor add_bias(const Tensor& a, const Tensor& bias);

// Repeat a length-d vector as r identical rows.
Tensor broadcast_rows(const Tensor& v, std::int64_t r);

// Apply one N x N adjacency to every N-row block of a stacked (B*N) x d
// matrix; the batched form of the GCN propagation product.
Tensor graph_mix(const Tensor& adj, const Tensor& x, std::int64_t n_nodes);

// out[i][j] = a[i][j] / (1 + sum_j a[i][j]); bounds row sums below 1.
Tensor row_normalize_plus_one(const Tensor& a);

// Value copy that blocks gradient flow.
Tensor detach(const Tensor& x);

// --- reverse pass --------------------------------------------------------

// Accumulate d(loss)/d(leaf) into every requires_grad leaf reachable from
// loss. One pass per forward graph: revisiting a consumed graph throws.
void backward(const Tensor& loss);

// Max over entries of |g_ad - g_fd| / max(1, |g_fd|) where g_fd is the
// central finite difference of f at x with step h in [1e-6, 1e-3].
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h);

} // namespace diffirm
