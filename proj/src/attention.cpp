#include "attention.hpp"

#include <cmath>
#include <string>

namespace scvfp {

Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v) {
    const size_t w = q.cols();
    if (k.cols() != w || v.cols() != w)
        throw ShapeError("attention_core: q/k/v widths differ");
    if (k.rows() != q.rows() || v.rows() != q.rows())
        throw ShapeError("attention_core: q/k/v row counts differ");
    Tensor scores = matmul_nt(q, k);
    Tensor alpha = softmax_rows(scores, std::sqrt(static_cast<double>(w)));
    return matmul(alpha, v);
}

AttentionOutput mhsa_forward(const Tensor& embeddings, const MhsaWeights& weights) {
    const size_t d = embeddings.cols();
    const size_t n = weights.heads();
    if (n == 0 || weights.wk.size() != n || weights.wv.size() != n)
        throw ShapeError("mhsa_forward: inconsistent head weights");
    if (d % n != 0) throw ShapeError("mhsa_forward: head count must divide d");
    const size_t d_h = d / n;

    AttentionOutput out;
    out.heads.reserve(n);
    for (size_t h = 0; h < n; ++h) {
        if (weights.wq[h].rows() != d_h || weights.wq[h].cols() != d_h)
            throw ShapeError("mhsa_forward: per-head matrices must be [d/N, d/N]");
        Tensor chunk = slice_cols(embeddings, h * d_h, d_h);
        Tensor q = matmul(chunk, weights.wq[h]);
        Tensor k = matmul(chunk, weights.wk[h]);
        Tensor v = matmul(chunk, weights.wv[h]);
        out.heads.push_back(attention_core(q, k, v));
    }
    Tensor concat = concat_cols(out.heads);
    if (weights.wo.rows() != d || weights.wo.cols() != d)
        throw ShapeError("mhsa_forward: output projection must be [d, d]");
    out.final = matmul(concat, weights.wo);
    return out;
}

AttentionOutput scmhsa_forward(const Tensor& embeddings, const ScmhsaWeights& weights) {
    const size_t d = embeddings.cols();
    const size_t n = weights.heads();
    if (n == 0 || weights.wk.size() != n || weights.wv.size() != n)
        throw ShapeError("scmhsa_forward: inconsistent head weights");
    const size_t d_head = weights.wq.front().cols();

    AttentionOutput out;
    out.heads.reserve(n);
    for (size_t h = 0; h < n; ++h) {
        if (weights.wq[h].rows() != d || weights.wq[h].cols() != d_head)
            throw ShapeError("scmhsa_forward: per-head matrices must be [d, d_head]");
        Tensor q = matmul(embeddings, weights.wq[h]);
        Tensor k = matmul(embeddings, weights.wk[h]);
        Tensor v = matmul(embeddings, weights.wv[h]);
        out.heads.push_back(attention_core(q, k, v));
    }
    Tensor concat = concat_cols(out.heads);
    if (weights.wo.rows() != n * d_head || weights.wo.cols() != d)
        throw ShapeError("scmhsa_forward: output projection must be [N*d_head, d]");
    out.final = matmul(concat, weights.wo);
    return out;
}

size_t mhsa_param_count(size_t d, size_t n_heads) {
    const size_t d_h = d / n_heads;
    return 3 * n_heads * d_h * d_h + d * d;
}

size_t scmhsa_param_count(size_t d, size_t n_heads, size_t d_head) {
    return 3 * n_heads * d * d_head + n_heads * d_head * d;
}

}  // namespace scvfp
