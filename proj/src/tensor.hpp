#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace scvfp {

class Tensor;

namespace detail {

// One node of the autodiff graph. Ops create nodes in forward order, so
// creation ids give a topological order for free; backward walks reachable
// nodes in reverse and each backward_fn adds its contribution into the
// parents' grad buffers (fan-out accumulates additively).
struct Node {
    std::vector<size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated on demand, same size as values
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<Tensor> parents;
    std::function<void(Node&)> backward_fn;
    uint64_t visit_mark = 0;
};

}  // namespace detail

// Dense row-major tensor of doubles, rank 1..3, with value semantics over a
// shared node. Immutable after creation except for leaf parameters, which
// the optimizer and the gradient checker mutate in place.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double value);
    static Tensor from(std::vector<size_t> shape, std::vector<double> values);
    static Tensor scalar(double value);
    // Leaf with requires_grad set; the only kind backward() deposits into.
    static Tensor param(std::vector<size_t> shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const std::vector<size_t>& shape() const { return node_->shape; }
    size_t rank() const { return node_->shape.size(); }
    size_t numel() const { return node_->values.size(); }
    // Row/column view of a rank-2 tensor.
    size_t rows() const;
    size_t cols() const;

    double item() const;  // numel() must be 1
    double at(size_t i) const { return node_->values[i]; }
    double at(size_t r, size_t c) const { return node_->values[r * cols() + c]; }

    std::span<const double> values() const { return node_->values; }
    std::span<double> mutable_values() { return node_->values; }
    std::span<const double> grad() const { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }
    bool is_leaf() const { return node_->is_leaf; }
    void zero_grad();

    // Identity of the underlying node (used by tests and the trainer).
    detail::Node* node() const { return node_.get(); }

    static Tensor wrap(std::shared_ptr<detail::Node> node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }
    const std::shared_ptr<detail::Node>& handle() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

// Graph recording is on by default; evaluation paths disable it so forward
// passes allocate no backward state.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// ---- forward ops -----------------------------------------------------------
// Every op validates shapes, checks the result for NaN/Inf, and registers a
// backward rule when any input requires grad.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor hadamard(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]·[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k]·[n,k]^T

// Row-wise softmax of exp(x/scale), stabilized by row-max subtraction.
Tensor softmax_rows(const Tensor& x, double scale);

Tensor gelu(const Tensor& x);  // exact erf form

// Normalizes the last axis to zero mean / unit variance, then applies
// per-feature gain and bias. gain/bias are rank-1 of the row width.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, size_t start, size_t width);
Tensor take_row(const Tensor& x, size_t row);            // -> [1, n]
Tensor add_row_bias(const Tensor& x, const Tensor& b);   // b: rank-1 [n]

Tensor sum(const Tensor& x);     // -> scalar [1]
Tensor mean(const Tensor& x);    // -> scalar [1]
Tensor sqnorm(const Tensor& x);  // sum of squares -> scalar [1]
Tensor l2norm(const Tensor& x);  // sqrt(sqnorm), gradient guarded at 0

// (1/m)·sum_k |cos(a_k, b_k)| over corresponding rows of two [m,n] tensors.
// Rows with norm below 1e-8 contribute 0; |.| takes subgradient 0 at the
// kink. When min_abs_cos is given it receives the smallest |cos| seen over
// unguarded rows (1.0 if every row was guarded) so callers can detect
// near-kink evaluations.
Tensor row_abs_cosine_mean(const Tensor& a, const Tensor& b, double* min_abs_cos = nullptr);

// Reverse-mode sweep from a scalar loss; every requires_grad leaf reachable
// from it accumulates d(loss)/d(leaf) into its grad buffer.
void backward(const Tensor& loss);

// Rounds every element through float32, used to keep parameters exactly
// representable in the 32-bit checkpoint/data formats.
void quantize_f32(Tensor& t);

}  // namespace scvfp
