#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attention.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace scvfp {

enum class Variant { Scmhsa, MhsaBaseline };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    size_t d = 768;         // embedding width
    size_t m = 5;           // window length
    size_t n_heads = 6;
    size_t d_head = 0;      // 0 = default d / n_heads
    size_t blocks = 6;
    size_t ffn_width = 0;   // 0 = default 4d
    size_t head_hidden = 0; // prediction MLP hidden width, 0 = default d
    Variant variant = Variant::Scmhsa;
    double lambda = 0.1;    // semantic-similarity loss weight
    int precision = 64;     // 32|64; see README on storage vs compute

    size_t resolved_d_head() const { return d_head ? d_head : d / n_heads; }
    size_t resolved_ffn_width() const { return ffn_width ? ffn_width : 4 * d; }
    size_t resolved_head_hidden() const { return head_hidden ? head_hidden : d; }

    void validate() const;
};

// One pre-norm encoder block: x += attn(ln1(x)); x += ffn(ln2(x)).
struct BlockState {
    MhsaWeights mhsa;      // used when variant == MhsaBaseline
    ScmhsaWeights scmhsa;  // used when variant == Scmhsa
    Tensor ln1_gain, ln1_bias;
    Tensor ln2_gain, ln2_bias;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct ModelState {
    ModelConfig config;
    std::vector<BlockState> blocks;
    Tensor final_ln_gain, final_ln_bias;
    Tensor head_w1, head_b1, head_w2, head_b2;

    // Canonical enumeration: the order used for init draws, checkpoints,
    // the optimizer, and parameter accounting.
    std::vector<std::pair<std::string, Tensor>> named_tensors() const;
    size_t parameter_total() const;
    void zero_grads() const;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) matrices, zero biases, unit
// layer-norm gains; matrices drawn in enumeration order, values snapped to
// float32 so checkpoints round-trip losslessly.
ModelState init_model(const ModelConfig& config, Xoshiro256pp& rng);

// Same structure with all-zero parameters (checkpoint loading fills it).
ModelState empty_model(const ModelConfig& config);

// Fresh parameter tensors holding the same values (used by worker threads).
ModelState clone_model(const ModelState& state);

// Fixed sinusoidal table: PE[t,2i] = sin(t / 10000^(2i/d)), PE[t,2i+1] = cos(...).
Tensor positional_encoding(size_t m, size_t d);

struct EncodeResult {
    Tensor output;                                  // [M, d]
    std::vector<std::vector<Tensor>> block_heads;   // per block, per head [M, head width]
};

EncodeResult encode(const Tensor& embeddings, const ModelState& state);

struct PredictResult {
    Tensor prediction;                              // [1, d]
    std::vector<std::vector<Tensor>> block_heads;
};

PredictResult predict_next(const Tensor& embeddings, const ModelState& state);

// Autoregressive continuation: feed each prediction back as the newest
// window row. Returns the k predictions stacked as [k, d].
Tensor rollout(const Tensor& embeddings, size_t steps, const ModelState& state);

struct ParamCountRow {
    std::string component;
    size_t count;
};

struct ParamCountTable {
    std::vector<ParamCountRow> rows;
    size_t total = 0;
};

// Closed-form parameter table for the given config (its variant).
ParamCountTable param_count(const ModelConfig& config);

}  // namespace scvfp
