#include "tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <utility>

namespace scvfp {

namespace {

using detail::Node;

thread_local bool g_grad_enabled = true;

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t e : shape) n *= e;
    return n;
}

void validate_shape(const std::vector<size_t>& shape) {
    if (shape.empty() || shape.size() > 3)
        throw ShapeError("tensor: rank must be 1..3");
    for (size_t e : shape)
        if (e == 0) throw ShapeError("tensor: zero extent");
}

void check_finite(const char* op, const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v))
            throw NumericError(std::string(op) + ": non-finite value produced");
    }
}

std::vector<double>& grad_buf(Node& n) {
    if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0);
    return n.grad;
}

Tensor make_node(std::vector<size_t> shape, std::vector<double> values, const char* op,
                 std::initializer_list<Tensor> parents, std::function<void(Node&)> backward_fn) {
    check_finite(op, values);
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    bool rg = false;
    if (g_grad_enabled) {
        for (const Tensor& p : parents) rg = rg || p.requires_grad();
    }
    node->requires_grad = rg;
    if (rg) {
        node->parents.assign(parents.begin(), parents.end());
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor::wrap(std::move(node));
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a rank-2 tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw ShapeError(std::string(op) + ": shape mismatch");
}

// C[m,n] += A[m,k] · B[k,n]
void gemm_nn_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[m,k] · B[n,k]^T
void gemm_nt_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C[k,n] += A[m,k]^T · B[m,n]
void gemm_tn_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<size_t> shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(std::vector<size_t> shape, double value) {
    validate_shape(shape);
    std::vector<double> values(shape_numel(shape), value);
    return make_node(std::move(shape), std::move(values), "full", {}, nullptr);
}

Tensor Tensor::from(std::vector<size_t> shape, std::vector<double> values) {
    validate_shape(shape);
    if (values.size() != shape_numel(shape))
        throw ShapeError("tensor: element count does not match shape");
    return make_node(std::move(shape), std::move(values), "from", {}, nullptr);
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::param(std::vector<size_t> shape, std::vector<double> values) {
    Tensor t = from(std::move(shape), std::move(values));
    t.node()->requires_grad = true;
    t.node()->is_leaf = true;
    t.node()->grad.assign(t.numel(), 0.0);
    return t;
}

size_t Tensor::rows() const {
    require_rank2(*this, "rows");
    return node_->shape[0];
}

size_t Tensor::cols() const {
    require_rank2(*this, "cols");
    return node_->shape[1];
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item: tensor is not a scalar");
    return node_->values[0];
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    const auto av = a.values(), bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_node(a.shape(), std::move(out), "add", {a, b}, [](Node& n) {
        for (int side = 0; side < 2; ++side) {
            Node& p = *n.parents[side].node();
            if (!p.requires_grad) continue;
            auto& g = grad_buf(p);
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    const auto av = a.values(), bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return make_node(a.shape(), std::move(out), "sub", {a, b}, [](Node& n) {
        Node& pa = *n.parents[0].node();
        Node& pb = *n.parents[1].node();
        if (pa.requires_grad) {
            auto& g = grad_buf(pa);
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = grad_buf(pb);
            for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Tensor scalar_mul(const Tensor& a, double c) {
    if (!std::isfinite(c)) throw NumericError("scalar_mul: non-finite scalar");
    std::vector<double> out(a.numel());
    const auto av = a.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
    return make_node(a.shape(), std::move(out), "scalar_mul", {a}, [c](Node& n) {
        Node& p = *n.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        for (size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
    });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    std::vector<double> out(a.numel());
    const auto av = a.values(), bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_node(a.shape(), std::move(out), "hadamard", {a, b}, [](Node& n) {
        Node& pa = *n.parents[0].node();
        Node& pb = *n.parents[1].node();
        if (pa.requires_grad) {
            auto& g = grad_buf(pa);
            const auto bv = n.parents[1].values();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * bv[i];
        }
        if (pb.requires_grad) {
            auto& g = grad_buf(pb);
            const auto av = n.parents[0].values();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

// ---- matrix products -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) throw ShapeError("matmul: inner extents do not match");
    std::vector<double> out(m * n, 0.0);
    gemm_nn_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_node({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& nd) {
        Node& pa = *nd.parents[0].node();
        Node& pb = *nd.parents[1].node();
        if (pa.requires_grad)  // dA += dC·B^T
            gemm_nt_acc(nd.grad.data(), pb.values.data(), grad_buf(pa).data(), m, n, k);
        if (pb.requires_grad)  // dB += A^T·dC
            gemm_tn_acc(pa.values.data(), nd.grad.data(), grad_buf(pb).data(), m, k, n);
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_nt");
    require_rank2(b, "matmul_nt");
    const size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) throw ShapeError("matmul_nt: widths do not match");
    std::vector<double> out(m * n, 0.0);
    gemm_nt_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_node({m, n}, std::move(out), "matmul_nt", {a, b}, [m, k, n](Node& nd) {
        Node& pa = *nd.parents[0].node();
        Node& pb = *nd.parents[1].node();
        if (pa.requires_grad)  // dA += dC·B
            gemm_nn_acc(nd.grad.data(), pb.values.data(), grad_buf(pa).data(), m, n, k);
        if (pb.requires_grad)  // dB += dC^T·A
            gemm_tn_acc(nd.grad.data(), pa.values.data(), grad_buf(pb).data(), m, n, k);
    });
}

// ---- softmax / gelu / layer norm --------------------------------------------

Tensor softmax_rows(const Tensor& x, double scale) {
    require_rank2(x, "softmax_rows");
    if (!(scale > 0.0)) throw ConfigError("softmax_rows: scale must be positive");
    const size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    const auto xv = x.values();
    for (size_t i = 0; i < m; ++i) {
        const double* row = xv.data() + i * n;
        double* prow = out.data() + i * n;
        double mx = row[0];
        for (size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (size_t j = 0; j < n; ++j) {
            prow[j] = std::exp((row[j] - mx) / scale);
            denom += prow[j];
        }
        for (size_t j = 0; j < n; ++j) prow[j] /= denom;
    }
    return make_node({m, n}, std::move(out), "softmax_rows", {x}, [m, n, scale](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        for (size_t i = 0; i < m; ++i) {
            const double* prow = nd.values.data() + i * n;
            const double* grow = nd.grad.data() + i * n;
            double dot = 0.0;
            for (size_t j = 0; j < n; ++j) dot += grow[j] * prow[j];
            double* out = g.data() + i * n;
            for (size_t j = 0; j < n; ++j) out[j] += prow[j] * (grow[j] - dot) / scale;
        }
    });
}

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.numel());
    const auto xv = x.values();
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * inv_sqrt2));
    return make_node(x.shape(), std::move(out), "gelu", {x}, [](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        const auto xv = nd.parents[0].values();
        constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
        const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        for (size_t i = 0; i < g.size(); ++i) {
            const double x = xv[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
            g[i] += nd.grad[i] * (cdf + x * pdf);
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_rank2(x, "layer_norm");
    const size_t m = x.rows(), n = x.cols();
    if (gain.rank() != 1 || gain.numel() != n || bias.rank() != 1 || bias.numel() != n)
        throw ShapeError("layer_norm: gain/bias must be rank-1 of the row width");
    std::vector<double> out(m * n);
    std::vector<double> inv_std(m), mu(m);
    const auto xv = x.values();
    const auto gv = gain.values(), bv = bias.values();
    for (size_t i = 0; i < m; ++i) {
        const double* row = xv.data() + i * n;
        double s = 0.0;
        for (size_t j = 0; j < n; ++j) s += row[j];
        const double mean = s / static_cast<double>(n);
        double var = 0.0;
        for (size_t j = 0; j < n; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        mu[i] = mean;
        inv_std[i] = is;
        double* orow = out.data() + i * n;
        for (size_t j = 0; j < n; ++j) orow[j] = gv[j] * (row[j] - mean) * is + bv[j];
    }
    return make_node({m, n}, std::move(out), "layer_norm", {x, gain, bias},
                     [m, n, mu = std::move(mu), inv_std = std::move(inv_std)](Node& nd) {
                         Node& px = *nd.parents[0].node();
                         Node& pg = *nd.parents[1].node();
                         Node& pb = *nd.parents[2].node();
                         const auto xv = nd.parents[0].values();
                         const auto gv = nd.parents[1].values();
                         const double inv_n = 1.0 / static_cast<double>(n);
                         for (size_t i = 0; i < m; ++i) {
                             const double* row = xv.data() + i * n;
                             const double* grow = nd.grad.data() + i * n;
                             const double is = inv_std[i];
                             if (pg.requires_grad) {
                                 auto& gg = grad_buf(pg);
                                 for (size_t j = 0; j < n; ++j)
                                     gg[j] += grow[j] * (row[j] - mu[i]) * is;
                             }
                             if (pb.requires_grad) {
                                 auto& gb = grad_buf(pb);
                                 for (size_t j = 0; j < n; ++j) gb[j] += grow[j];
                             }
                             if (px.requires_grad) {
                                 // dL/dxhat = g ⊙ gain; fold the mean/variance terms per row
                                 double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                                 for (size_t j = 0; j < n; ++j) {
                                     const double xhat = (row[j] - mu[i]) * is;
                                     const double dxhat = grow[j] * gv[j];
                                     sum_dxhat += dxhat;
                                     sum_dxhat_xhat += dxhat * xhat;
                                 }
                                 auto& gx = grad_buf(px);
                                 double* gxr = gx.data() + i * n;
                                 for (size_t j = 0; j < n; ++j) {
                                     const double xhat = (row[j] - mu[i]) * is;
                                     const double dxhat = grow[j] * gv[j];
                                     gxr[j] += is * (dxhat - inv_n * sum_dxhat -
                                                     inv_n * xhat * sum_dxhat_xhat);
                                 }
                             }
                         }
                     });
}

// ---- reshaping -------------------------------------------------------------

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const size_t m = parts.front().rows();
    size_t total = 0;
    std::vector<size_t> widths;
    widths.reserve(parts.size());
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.rows() != m) throw ShapeError("concat_cols: row counts differ");
        widths.push_back(p.cols());
        total += p.cols();
    }
    std::vector<double> out(m * total);
    size_t offset = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const auto pv = parts[pi].values();
        const size_t w = widths[pi];
        for (size_t i = 0; i < m; ++i)
            std::copy_n(pv.data() + i * w, w, out.data() + i * total + offset);
        offset += w;
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = {m, total};
    node->values = std::move(out);
    bool rg = false;
    if (grad_enabled())
        for (const Tensor& p : parts) rg = rg || p.requires_grad();
    node->requires_grad = rg;
    if (rg) {
        node->parents = parts;
        node->backward_fn = [m, total, widths](Node& nd) {
            size_t offset = 0;
            for (size_t pi = 0; pi < nd.parents.size(); ++pi) {
                Node& p = *nd.parents[pi].node();
                const size_t w = widths[pi];
                if (p.requires_grad) {
                    auto& g = grad_buf(p);
                    for (size_t i = 0; i < m; ++i) {
                        const double* src = nd.grad.data() + i * total + offset;
                        double* dst = g.data() + i * w;
                        for (size_t j = 0; j < w; ++j) dst[j] += src[j];
                    }
                }
                offset += w;
            }
        };
    }
    return Tensor::wrap(std::move(node));
}

Tensor slice_cols(const Tensor& x, size_t start, size_t width) {
    require_rank2(x, "slice_cols");
    const size_t m = x.rows(), n = x.cols();
    if (width == 0 || start + width > n) throw ShapeError("slice_cols: range out of bounds");
    std::vector<double> out(m * width);
    const auto xv = x.values();
    for (size_t i = 0; i < m; ++i)
        std::copy_n(xv.data() + i * n + start, width, out.data() + i * width);
    return make_node({m, width}, std::move(out), "slice_cols", {x}, [m, n, start, width](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        for (size_t i = 0; i < m; ++i) {
            const double* src = nd.grad.data() + i * width;
            double* dst = g.data() + i * n + start;
            for (size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
    });
}

Tensor take_row(const Tensor& x, size_t row) {
    require_rank2(x, "take_row");
    const size_t n = x.cols();
    if (row >= x.rows()) throw ShapeError("take_row: row out of bounds");
    const auto xv = x.values();
    std::vector<double> out(xv.begin() + row * n, xv.begin() + (row + 1) * n);
    return make_node({1, n}, std::move(out), "take_row", {x}, [row, n](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        for (size_t j = 0; j < n; ++j) g[row * n + j] += nd.grad[j];
    });
}

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
    require_rank2(x, "add_row_bias");
    const size_t m = x.rows(), n = x.cols();
    if (b.rank() != 1 || b.numel() != n)
        throw ShapeError("add_row_bias: bias must be rank-1 of the row width");
    std::vector<double> out(m * n);
    const auto xv = x.values(), bv = b.values();
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
    return make_node({m, n}, std::move(out), "add_row_bias", {x, b}, [m, n](Node& nd) {
        Node& px = *nd.parents[0].node();
        Node& pb = *nd.parents[1].node();
        if (px.requires_grad) {
            auto& g = grad_buf(px);
            for (size_t i = 0; i < g.size(); ++i) g[i] += nd.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = grad_buf(pb);
            for (size_t i = 0; i < m; ++i)
                for (size_t j = 0; j < n; ++j) g[j] += nd.grad[i * n + j];
        }
    });
}

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return make_node({1}, {s}, "sum", {x}, [](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        for (double& v : g) v += nd.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    const double inv_n = 1.0 / static_cast<double>(x.numel());
    return make_node({1}, {s * inv_n}, "mean", {x}, [inv_n](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        for (double& v : g) v += nd.grad[0] * inv_n;
    });
}

Tensor sqnorm(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return make_node({1}, {s}, "sqnorm", {x}, [](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        const auto xv = nd.parents[0].values();
        for (size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * nd.grad[0] * xv[i];
    });
}

Tensor l2norm(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    const double norm = std::sqrt(s);
    return make_node({1}, {norm}, "l2norm", {x}, [norm](Node& nd) {
        Node& p = *nd.parents[0].node();
        if (!p.requires_grad) return;
        auto& g = grad_buf(p);
        const auto xv = nd.parents[0].values();
        const double denom = std::max(norm, 1e-8);
        for (size_t i = 0; i < g.size(); ++i) g[i] += nd.grad[0] * xv[i] / denom;
    });
}

Tensor row_abs_cosine_mean(const Tensor& a, const Tensor& b, double* min_abs_cos) {
    require_rank2(a, "row_abs_cosine_mean");
    require_same_shape(a, b, "row_abs_cosine_mean");
    constexpr double norm_eps = 1e-8;
    const size_t m = a.rows(), n = a.cols();
    const auto av = a.values(), bv = b.values();
    std::vector<double> cosines(m, 0.0);
    std::vector<double> inv_na(m, 0.0), inv_nb(m, 0.0);
    double acc = 0.0, smallest = 1.0;
    for (size_t i = 0; i < m; ++i) {
        const double* ra = av.data() + i * n;
        const double* rb = bv.data() + i * n;
        double dot = 0.0, na2 = 0.0, nb2 = 0.0;
        for (size_t j = 0; j < n; ++j) {
            dot += ra[j] * rb[j];
            na2 += ra[j] * ra[j];
            nb2 += rb[j] * rb[j];
        }
        const double na = std::sqrt(na2), nb = std::sqrt(nb2);
        if (na < norm_eps || nb < norm_eps) continue;  // guarded row: cos := 0
        const double c = dot / (na * nb);
        cosines[i] = c;
        inv_na[i] = 1.0 / na;
        inv_nb[i] = 1.0 / nb;
        acc += std::abs(c);
        smallest = std::min(smallest, std::abs(c));
    }
    if (min_abs_cos) *min_abs_cos = smallest;
    const double inv_m = 1.0 / static_cast<double>(m);
    return make_node(
        {1}, {acc * inv_m}, "row_abs_cosine_mean", {a, b},
        [m, n, inv_m, cosines = std::move(cosines), inv_na = std::move(inv_na),
         inv_nb = std::move(inv_nb)](Node& nd) {
            Node& pa = *nd.parents[0].node();
            Node& pb = *nd.parents[1].node();
            const auto av = nd.parents[0].values();
            const auto bv = nd.parents[1].values();
            for (size_t i = 0; i < m; ++i) {
                const double c = cosines[i];
                // guarded rows (inv_na == 0) and the |.| kink both get 0
                if (inv_na[i] == 0.0 || c == 0.0) continue;
                const double s = (c > 0.0 ? 1.0 : -1.0) * nd.grad[0] * inv_m;
                const double* ra = av.data() + i * n;
                const double* rb = bv.data() + i * n;
                const double inv_prod = inv_na[i] * inv_nb[i];
                if (pa.requires_grad) {
                    auto& g = grad_buf(pa);
                    double* gr = g.data() + i * n;
                    for (size_t j = 0; j < n; ++j)
                        gr[j] += s * (rb[j] * inv_prod - c * ra[j] * inv_na[i] * inv_na[i]);
                }
                if (pb.requires_grad) {
                    auto& g = grad_buf(pb);
                    double* gr = g.data() + i * n;
                    for (size_t j = 0; j < n; ++j)
                        gr[j] += s * (ra[j] * inv_prod - c * rb[j] * inv_nb[i] * inv_nb[i]);
                }
            }
        });
}

// ---- backward --------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined()) throw ShapeError("backward: undefined tensor");
    if (loss.numel() != 1) throw ShapeError("backward: loss must be a scalar");
    Node* root = loss.node();
    if (!root->requires_grad) return;  // no leaf depends on it

    static std::atomic<uint64_t> token_source{1};
    const uint64_t token = token_source.fetch_add(1, std::memory_order_relaxed);

    // Reverse DFS postorder over parent edges = reverse topological order.
    struct Frame {
        Node* node;
        size_t next_parent;
    };
    std::vector<Node*> postorder;
    std::vector<Frame> stack;
    root->visit_mark = token;
    stack.push_back({root, 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].node();
            if (p->requires_grad && p->visit_mark != token) {
                p->visit_mark = token;
                stack.push_back({p, 0});
            }
        } else {
            postorder.push_back(f.node);
            stack.pop_back();
        }
    }

    grad_buf(*root)[0] += 1.0;
    for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

void quantize_f32(Tensor& t) {
    for (double& v : t.mutable_values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace scvfp
