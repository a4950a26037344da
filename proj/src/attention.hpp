#pragma once

#include <cstddef>
#include <vector>

#include "tensor.hpp"

namespace scvfp {

// Self-attention over an M-frame window of embeddings, no causal mask.
// Projections follow the row convention: out = in · W, so a matrix that
// maps width a to width b has shape [a, b].

// Split-head baseline: the d-wide embedding is sliced into N chunks of
// d_h = d/N and each head sees only its own chunk.
struct MhsaWeights {
    std::vector<Tensor> wq, wk, wv;  // per head, [d_h, d_h]
    Tensor wo;                       // [d, d]

    size_t heads() const { return wq.size(); }
};

// Semantic-concentration variant: every head projects the full d-wide
// embedding to width d_head; the output projection restores width d.
struct ScmhsaWeights {
    std::vector<Tensor> wq, wk, wv;  // per head, [d, d_head]
    Tensor wo;                       // [N·d_head, d]

    size_t heads() const { return wq.size(); }
};

struct AttentionOutput {
    Tensor final;               // [M, d]
    std::vector<Tensor> heads;  // N tensors, each [M, head width]
};

// softmax(Q·K^T / sqrt(width)) · V for equal-width Q, K, V.
Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v);

AttentionOutput mhsa_forward(const Tensor& embeddings, const MhsaWeights& weights);
AttentionOutput scmhsa_forward(const Tensor& embeddings, const ScmhsaWeights& weights);

// Closed-form attention parameter counts per block.
size_t mhsa_param_count(size_t d, size_t n_heads);
size_t scmhsa_param_count(size_t d, size_t n_heads, size_t d_head);

}  // namespace scvfp
