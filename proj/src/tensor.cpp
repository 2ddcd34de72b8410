#include "diffirm/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace diffirm {

namespace {

std::atomic<std::uint64_t> g_seq{1};

void check_finite(const std::vector<double>& v, const char* where) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw contract_error(std::string(where) + ": non-finite value encountered");
        }
    }
}

void require_2d(const Tensor& t, const char* where) {
    if (t.shape().size() != 2) {
        throw dimension_error(std::string(where) + ": expected a 2-D tensor, got shape " + shape_str(t.shape()));
    }
}

} // namespace

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

Tensor make_node(Shape shape, std::vector<double> data,
                 std::vector<Tensor> parents,
                 std::function<void(TensorNode&)> backward_fn) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    if (shape_numel(node->shape) != static_cast<std::int64_t>(data.size())) {
        throw dimension_error("tensor: data length does not match shape " + shape_str(node->shape));
    }
    node->data = std::move(data);
    node->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    node->requires_grad = rg;
    if (rg) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

// --- construction ---------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return from_data(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    return from_data(shape, std::vector<double>(shape_numel(shape), value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    for (auto e : shape) {
        if (e <= 0) throw dimension_error("tensor: shape extents must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
        throw dimension_error("tensor: data length does not match shape " + shape_str(shape));
    }
    check_finite(data, "tensor construction");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    node->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
    if (!node_) throw contract_error("tensor: undefined handle");
    return node_->shape;
}

std::int64_t Tensor::numel() const { return node_ ? node_->numel() : 0; }

std::int64_t Tensor::rows() const {
    require_2d(*this, "rows");
    return node_->shape[0];
}

std::int64_t Tensor::cols() const {
    require_2d(*this, "cols");
    return node_->shape[1];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return node_ && !node_->backward_fn; }

std::span<const double> Tensor::data() const {
    if (!node_) throw contract_error("tensor: undefined handle");
    return node_->data;
}

double Tensor::value() const {
    if (numel() != 1) throw contract_error("tensor: value() requires a one-element tensor");
    return node_->data[0];
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
    require_2d(*this, "at");
    return node_->data[static_cast<std::size_t>(r * cols() + c)];
}

std::span<const double> Tensor::grad() const {
    if (!node_) throw contract_error("tensor: undefined handle");
    if (node_->grad.empty()) node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_) return;
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::set_data(std::span<const double> values) {
    if (!node_) throw contract_error("tensor: undefined handle");
    if (node_->backward_fn) throw contract_error("tensor: set_data only valid on leaves");
    if (static_cast<std::int64_t>(values.size()) != numel()) {
        throw dimension_error("tensor: set_data length mismatch");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw contract_error("tensor: set_data with non-finite value");
    }
    std::copy(values.begin(), values.end(), node_->data.begin());
}

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::int64_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
    if (k != k2) {
        throw dimension_error("matmul: inner extents disagree, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + p * n;
            double* orow = out.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    check_finite(out, "matmul");
    return make_node({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& node) {
        auto& pa = node.parents[0];
        auto& pb = node.parents[1];
        const double* g = node.grad.data();
        const double* da = pa.node()->data.data();
        const double* db = pb.node()->data.data();
        if (pa.requires_grad()) {
            pa.node()->ensure_grad();
            double* ga = pa.node()->grad.data();
            // dA = G * B^T
            for (std::int64_t i = 0; i < m; ++i)
                for (std::int64_t j = 0; j < n; ++j) {
                    const double gv = g[i * n + j];
                    if (gv == 0.0) continue;
                    for (std::int64_t p = 0; p < k; ++p) ga[i * k + p] += gv * db[p * n + j];
                }
        }
        if (pb.requires_grad()) {
            pb.node()->ensure_grad();
            double* gb = pb.node()->grad.data();
            // dB = A^T * G
            for (std::int64_t i = 0; i < m; ++i)
                for (std::int64_t p = 0; p < k; ++p) {
                    const double av = da[i * k + p];
                    if (av == 0.0) continue;
                    for (std::int64_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
                }
        }
    });
}

Tensor elementwise(const Tensor& a, const Tensor& b, ElemOp op) {
    const bool a_scalar = a.numel() == 1;
    const bool b_scalar = b.numel() == 1;
    if (!a_scalar && !b_scalar && a.shape() != b.shape()) {
        throw dimension_error("elementwise: shapes disagree, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const Tensor& big = a_scalar && !b_scalar ? b : a;
    const std::size_t n = static_cast<std::size_t>(big.numel());
    std::vector<double> out(n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = pa[a_scalar ? 0 : i];
        const double y = pb[b_scalar ? 0 : i];
        switch (op) {
            case ElemOp::add: out[i] = x + y; break;
            case ElemOp::sub: out[i] = x - y; break;
            case ElemOp::mul: out[i] = x * y; break;
        }
    }
    check_finite(out, "elementwise");
    return make_node(big.shape(), std::move(out), {a, b},
                     [op, a_scalar, b_scalar, n](TensorNode& node) {
        auto& pa = node.parents[0];
        auto& pb = node.parents[1];
        const double* g = node.grad.data();
        const double* da = pa.node()->data.data();
        const double* db = pb.node()->data.data();
        if (pa.requires_grad()) {
            pa.node()->ensure_grad();
            double* ga = pa.node()->grad.data();
            for (std::size_t i = 0; i < n; ++i) {
                double d = 0.0;
                switch (op) {
                    case ElemOp::add: d = g[i]; break;
                    case ElemOp::sub: d = g[i]; break;
                    case ElemOp::mul: d = g[i] * db[b_scalar ? 0 : i]; break;
                }
                ga[a_scalar ? 0 : i] += d;
            }
        }
        if (pb.requires_grad()) {
            pb.node()->ensure_grad();
            double* gb = pb.node()->grad.data();
            for (std::size_t i = 0; i < n; ++i) {
                double d = 0.0;
                switch (op) {
                    case ElemOp::add: d = g[i]; break;
                    case ElemOp::sub: d = -g[i]; break;
                    case ElemOp::mul: d = g[i] * da[a_scalar ? 0 : i]; break;
                }
                gb[b_scalar ? 0 : i] += d;
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElemOp::add); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElemOp::sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElemOp::mul); }

Tensor scale(const Tensor& a, double c) {
    if (!std::isfinite(c)) throw contract_error("scale: non-finite factor");
    const std::size_t n = static_cast<std::size_t>(a.numel());
    std::vector<double> out(n);
    const double* pa = a.data().data();
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] * c;
    check_finite(out, "scale");
    return make_node(a.shape(), std::move(out), {a}, [c, n](TensorNode& node) {
        auto& pa = node.parents[0];
        if (!pa.requires_grad()) return;
        pa.node()->ensure_grad();
        double* ga = pa.node()->grad.data();
        const double* g = node.grad.data();
        for (std::size_t i = 0; i < n; ++i) ga[i] += c * g[i];
    });
}

Tensor add_const(const Tensor& a, double c) {
    if (!std::isfinite(c)) throw contract_error("add_const: non-finite addend");
    const std::size_t n = static_cast<std::size_t>(a.numel());
    std::vector<double> out(n);
    const double* pa = a.data().data();
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] + c;
    check_finite(out, "add_const");
    return make_node(a.shape(), std::move(out), {a}, [n](TensorNode& node) {
        auto& pa = node.parents[0];
        if (!pa.requires_grad()) return;
        pa.node()->ensure_grad();
        double* ga = pa.node()->grad.data();
        const double* g = node.grad.data();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    });
}

Tensor activation(const Tensor& x, Act kind) {
    const std::size_t n = static_cast<std::size_t>(x.numel());
    std::vector<double> out(n);
    const double* px = x.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = px[i];
        switch (kind) {
            case Act::relu: out[i] = v > 0.0 ? v : 0.0; break;
            case Act::sigmoid: out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                                 : std::exp(v) / (1.0 + std::exp(v)); break;
            case Act::tanh: out[i] = std::tanh(v); break;
        }
    }
    check_finite(out, "activation");
    return make_node(x.shape(), std::move(out), {x}, [kind, n](TensorNode& node) {
        auto& px = node.parents[0];
        if (!px.requires_grad()) return;
        px.node()->ensure_grad();
        double* gx = px.node()->grad.data();
        const double* g = node.grad.data();
        const double* in = px.node()->data.data();
        const double* y = node.data.data();
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            switch (kind) {
                case Act::relu: d = in[i] > 0.0 ? 1.0 : 0.0; break;
                case Act::sigmoid: d = y[i] * (1.0 - y[i]); break;
                case Act::tanh: d = 1.0 - y[i] * y[i]; break;
            }
            gx[i] += g[i] * d;
        }
    });
}

Tensor relu(const Tensor& x) { return activation(x, Act::relu); }
Tensor sigmoid(const Tensor& x) { return activation(x, Act::sigmoid); }

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw dimension_error("mse_loss: shapes disagree, " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
    }
    const std::size_t n = static_cast<std::size_t>(pred.numel());
    const double* pp = pred.data().data();
    const double* pt = target.data().data();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pp[i] - pt[i];
        acc += d * d;
    }
    const double loss = acc / static_cast<double>(n);
    if (!std::isfinite(loss)) throw contract_error("mse_loss: non-finite value encountered");
    return make_node({1}, {loss}, {pred, target}, [n](TensorNode& node) {
        auto& pp = node.parents[0];
        auto& pt = node.parents[1];
        const double g = node.grad[0];
        const double* dp = pp.node()->data.data();
        const double* dt = pt.node()->data.data();
        const double c = 2.0 * g / static_cast<double>(n);
        if (pp.requires_grad()) {
            pp.node()->ensure_grad();
            double* gp = pp.node()->grad.data();
            for (std::size_t i = 0; i < n; ++i) gp[i] += c * (dp[i] - dt[i]);
        }
        if (pt.requires_grad()) {
            pt.node()->ensure_grad();
            double* gt = pt.node()->grad.data();
            for (std::size_t i = 0; i < n; ++i) gt[i] -= c * (dp[i] - dt[i]);
        }
    });
}

Tensor sum(const Tensor& x) {
    const std::size_t n = static_cast<std::size_t>(x.numel());
    const double* px = x.data().data();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += px[i];
    if (!std::isfinite(acc)) throw contract_error("sum: non-finite value encountered");
    return make_node({1}, {acc}, {x}, [n](TensorNode& node) {
        auto& px = node.parents[0];
        if (!px.requires_grad()) return;
        px.node()->ensure_grad();
        double* gx = px.node()->grad.data();
        const double g = node.grad[0];
        for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
}

Tensor mean(const Tensor& x) {
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const std::int64_t r = a.rows(), c = a.cols();
    std::vector<double> out(static_cast<std::size_t>(r * c));
    const double* pa = a.data().data();
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out[j * r + i] = pa[i * c + j];
    return make_node({c, r}, std::move(out), {a}, [r, c](TensorNode& node) {
        auto& pa = node.parents[0];
        if (!pa.requires_grad()) return;
        pa.node()->ensure_grad();
        double* ga = pa.node()->grad.data();
        const double* g = node.grad.data();
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
    });
}

Tensor slice_cols(const Tensor& a, std::int64_t c0, std::int64_t c1) {
    require_2d(a, "slice_cols");
    const std::int64_t r = a.rows(), c = a.cols();
    if (c0 < 0 || c1 > c || c0 >= c1) {
        throw dimension_error("slice_cols: invalid range [" + std::to_string(c0) + ", " + std::to_string(c1) + ") for " + shape_str(a.shape()));
    }
    const std::int64_t w = c1 - c0;
    std::vector<double> out(static_cast<std::size_t>(r * w));
    const double* pa = a.data().data();
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < w; ++j) out[i * w + j] = pa[i * c + c0 + j];
    return make_node({r, w}, std::move(out), {a}, [r, c, c0, w](TensorNode& node) {
        auto& pa = node.parents[0];
        if (!pa.requires_grad()) return;
        pa.node()->ensure_grad();
        double* ga = pa.node()->grad.data();
        const double* g = node.grad.data();
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < w; ++j) ga[i * c + c0 + j] += g[i * w + j];
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw contract_error("concat_cols: no parts");
    const std::int64_t r = parts[0].rows();
    std::int64_t total = 0;
    for (const auto& p : parts) {
        require_2d(p, "concat_cols");
        if (p.rows() != r) throw dimension_error("concat_cols: row counts disagree");
        total += p.cols();
    }
    std::vector<double> out(static_cast<std::size_t>(r * total));
    std::int64_t off = 0;
    for (const auto& p : parts) {
        const std::int64_t w = p.cols();
        const double* pp = p.data().data();
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < w; ++j) out[i * total + off + j] = pp[i * w + j];
        off += w;
    }
    std::vector<std::int64_t> widths;
    for (const auto& p : parts) widths.push_back(p.cols());
    return make_node({r, total}, std::move(out), parts, [r, total, widths](TensorNode& node) {
        const double* g = node.grad.data();
        std::int64_t off = 0;
        for (std::size_t k = 0; k < node.parents.size(); ++k) {
            auto& p = node.parents[k];
            const std::int64_t w = widths[k];
            if (p.requires_grad()) {
                p.node()->ensure_grad();
                double* gp = p.node()->grad.data();
                for (std::int64_t i = 0; i < r; ++i)
                    for (std::int64_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + off + j];
            }
            off += w;
        }
    });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
    require_2d(a, "add_bias");
    const std::int64_t r = a.rows(), c = a.cols();
    if (bias.numel() != c) {
        throw dimension_error("add_bias: bias length " + std::to_string(bias.numel()) + " vs " + std::to_string(c) + " columns");
    }
    std::vector<double> out(static_cast<std::size_t>(r * c));
    const double* pa = a.data().data();
    const double* pb = bias.data().data();
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out[i * c + j] = pa[i * c + j] + pb[j];
    check_finite(out, "add_bias");
    return make_node({r, c}, std::move(out), {a, bias}, [r, c](TensorNode& node) {
        auto& pa = node.parents[0];
        auto& pb = node.parents[1];
        const double* g = node.grad.data();
        if (pa.requires_grad()) {
            pa.node()->ensure_grad();
            double* ga = pa.node()->grad.data();
            for (std::int64_t i = 0; i < r * c; ++i) ga[i] += g[i];
        }
        if (pb.requires_grad()) {
            pb.node()->ensure_grad();
            double* gb = pb.node()->grad.data();
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
        }
    });
}

Tensor broadcast_rows(const Tensor& v, std::int64_t r) {
    if (r <= 0) throw dimension_error("broadcast_rows: row count must be positive");
    const std::int64_t d = v.numel();
    std::vector<double> out(static_cast<std::size_t>(r * d));
    const double* pv = v.data().data();
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < d; ++j) out[i * d + j] = pv[j];
    return make_node({r, d}, std::move(out), {v}, [r, d](TensorNode& node) {
        auto& pv = node.parents[0];
        if (!pv.requires_grad()) return;
        pv.node()->ensure_grad();
        double* gv = pv.node()->grad.data();
        const double* g = node.grad.data();
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < d; ++j) gv[j] += g[i * d + j];
    });
}

Tensor graph_mix(const Tensor& adj, const Tensor& x, std::int64_t n_nodes) {
    require_2d(adj, "graph_mix");
    require_2d(x, "graph_mix");
    const std::int64_t n = n_nodes;
    if (adj.rows() != n || adj.cols() != n) {
        throw dimension_error("graph_mix: adjacency must be " + std::to_string(n) + "-square, got " + shape_str(adj.shape()));
    }
    const std::int64_t rows = x.rows(), d = x.cols();
    if (rows % n != 0) {
        throw dimension_error("graph_mix: row count " + std::to_string(rows) + " is not a multiple of " + std::to_string(n) + " nodes");
    }
    const std::int64_t batches = rows / n;
    std::vector<double> out(static_cast<std::size_t>(rows * d), 0.0);
    const double* pa = adj.data().data();
    const double* px = x.data().data();
    for (std::int64_t b = 0; b < batches; ++b) {
        const double* xb = px + b * n * d;
        double* ob = out.data() + b * n * d;
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t p = 0; p < n; ++p) {
                const double av = pa[i * n + p];
                if (av == 0.0) continue;
                const double* xr = xb + p * d;
                double* orow = ob + i * d;
                for (std::int64_t j = 0; j < d; ++j) orow[j] += av * xr[j];
            }
    }
    check_finite(out, "graph_mix");
    return make_node({rows, d}, std::move(out), {adj, x}, [n, batches, d](TensorNode& node) {
        auto& padj = node.parents[0];
        auto& px = node.parents[1];
        const double* g = node.grad.data();
        const double* adj_d = padj.node()->data.data();
        const double* x_d = px.node()->data.data();
        if (px.requires_grad()) {
            px.node()->ensure_grad();
            double* gx = px.node()->grad.data();
            // dX_b = A^T * G_b
            for (std::int64_t b = 0; b < batches; ++b)
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t p = 0; p < n; ++p) {
                        const double av = adj_d[i * n + p];
                        if (av == 0.0) continue;
                        const double* gr = g + (b * n + i) * d;
                        double* xr = gx + (b * n + p) * d;
                        for (std::int64_t j = 0; j < d; ++j) xr[j] += av * gr[j];
                    }
        }
        if (padj.requires_grad()) {
            padj.node()->ensure_grad();
            double* ga = padj.node()->grad.data();
            // dA += sum_b G_b * X_b^T
            for (std::int64_t b = 0; b < batches; ++b)
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t p = 0; p < n; ++p) {
                        const double* gr = g + (b * n + i) * d;
                        const double* xr = x_d + (b * n + p) * d;
                        double acc = 0.0;
                        for (std::int64_t j = 0; j < d; ++j) acc += gr[j] * xr[j];
                        ga[i * n + p] += acc;
                    }
        }
    });
}

Tensor row_normalize_plus_one(const Tensor& a) {
    require_2d(a, "row_normalize_plus_one");
    const std::int64_t r = a.rows(), c = a.cols();
    std::vector<double> out(static_cast<std::size_t>(r * c));
    const double* pa = a.data().data();
    for (std::int64_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::int64_t j = 0; j < c; ++j) s += pa[i * c + j];
        const double inv = 1.0 / (1.0 + s);
        for (std::int64_t j = 0; j < c; ++j) out[i * c + j] = pa[i * c + j] * inv;
    }
    check_finite(out, "row_normalize_plus_one");
    return make_node({r, c}, std::move(out), {a}, [r, c](TensorNode& node) {
        auto& pa = node.parents[0];
        if (!pa.requires_grad()) return;
        pa.node()->ensure_grad();
        double* ga = pa.node()->grad.data();
        const double* g = node.grad.data();
        const double* v = pa.node()->data.data();
        for (std::int64_t i = 0; i < r; ++i) {
            double s = 0.0, dot = 0.0;
            for (std::int64_t j = 0; j < c; ++j) s += v[i * c + j];
            const double inv = 1.0 / (1.0 + s);
            for (std::int64_t j = 0; j < c; ++j) dot += g[i * c + j] * v[i * c + j];
            for (std::int64_t j = 0; j < c; ++j) {
                ga[i * c + j] += g[i * c + j] * inv - dot * inv * inv;
            }
        }
    });
}

Tensor detach(const Tensor& x) {
    return Tensor::from_data(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), false);
}

// --- backward ---------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined()) throw contract_error("backward: undefined tensor");
    TensorNode* root = loss.node();
    if (root->numel() != 1) throw contract_error("backward: loss must be scalar, got shape " + shape_str(root->shape));
    if (!root->requires_grad) {
        throw contract_error("backward: loss does not depend on any requires_grad tensor");
    }

    // Collect the reachable subgraph; creation order is a topological order.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<TensorNode*> stack{root};
    seen.insert(root);
    while (!stack.empty()) {
        TensorNode* n = stack.back();
        stack.pop_back();
        if (n->consumed) {
            throw contract_error("backward: tape already consumed; rebuild the forward graph");
        }
        order.push_back(n);
        for (const auto& p : n->parents) {
            TensorNode* pn = p.node();
            if (pn->requires_grad && seen.insert(pn).second) stack.push_back(pn);
        }
    }
    std::sort(order.begin(), order.end(),
              [](const TensorNode* a, const TensorNode* b) { return a->seq > b->seq; });

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (TensorNode* n : order) {
        if (!n->backward_fn) continue; // leaf: grad already accumulated
        n->ensure_grad();
        n->backward_fn(*n);
        n->consumed = true;
    }
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
    if (h < 1e-6 || h > 1e-3) throw contract_error("grad_check: step must lie in [1e-6, 1e-3]");
    std::vector<double> base(x.data().begin(), x.data().end());
    const std::int64_t n = x.numel();

    Tensor leaf = Tensor::from_data(x.shape(), base, true);
    Tensor y = f(leaf);
    if (y.numel() != 1) throw contract_error("grad_check: f must return a scalar");
    std::vector<double> g_ad(static_cast<std::size_t>(n), 0.0);
    if (y.requires_grad()) {
        backward(y);
        g_ad.assign(leaf.grad().begin(), leaf.grad().end());
    }

    double worst = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<double> hi = base, lo = base;
        hi[static_cast<std::size_t>(i)] += h;
        lo[static_cast<std::size_t>(i)] -= h;
        const double fhi = f(Tensor::from_data(x.shape(), hi, false)).value();
        const double flo = f(Tensor::from_data(x.shape(), lo, false)).value();
        const double g_fd = (fhi - flo) / (2.0 * h);
        const double err = std::abs(g_ad[static_cast<std::size_t>(i)] - g_fd) / std::max(1.0, std::abs(g_fd));
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace diffirm
