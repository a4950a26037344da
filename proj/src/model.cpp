#include "model.hpp"

#include <algorithm>
#include <cmath>

namespace scvfp {

std::string variant_name(Variant v) {
    return v == Variant::Scmhsa ? "scmhsa" : "mhsa_baseline";
}

Variant variant_from_name(const std::string& name) {
    if (name == "scmhsa") return Variant::Scmhsa;
    if (name == "mhsa_baseline") return Variant::MhsaBaseline;
    throw ConfigError("unknown variant '" + name + "' (expected scmhsa or mhsa_baseline)");
}

void ModelConfig::validate() const {
    if (d == 0 || m == 0 || n_heads == 0 || blocks == 0)
        throw ConfigError("model config: extents must be >= 1");
    if (d % 2 != 0) throw ConfigError("model config: d must be even for positional encoding");
    if (variant == Variant::MhsaBaseline && d % n_heads != 0)
        throw ConfigError("model config: baseline variant needs n_heads to divide d");
    if (variant == Variant::Scmhsa && resolved_d_head() == 0)
        throw ConfigError("model config: d_head must be >= 1");
    if (lambda < 0.0) throw ConfigError("model config: lambda must be >= 0");
    if (precision != 32 && precision != 64)
        throw ConfigError("model config: precision must be 32 or 64");
}

namespace {

// rng == nullptr builds the all-zero skeleton.
Tensor init_matrix(size_t rows, size_t cols, Xoshiro256pp* rng) {
    std::vector<double> values(rows * cols, 0.0);
    if (rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(rows));  // fan_in = input width
        for (double& v : values) v = rng->next_uniform(-bound, bound);
    }
    Tensor t = Tensor::param({rows, cols}, std::move(values));
    quantize_f32(t);
    return t;
}

Tensor init_const_vector(size_t n, double value) {
    return Tensor::param({n}, std::vector<double>(n, value));
}

ModelState build_model(const ModelConfig& config, Xoshiro256pp* rng) {
    config.validate();
    const size_t d = config.d;
    const size_t n = config.n_heads;
    const size_t f = config.resolved_ffn_width();
    const size_t h = config.resolved_head_hidden();

    ModelState state;
    state.config = config;
    state.blocks.resize(config.blocks);
    for (BlockState& block : state.blocks) {
        if (config.variant == Variant::Scmhsa) {
            const size_t dh = config.resolved_d_head();
            for (size_t i = 0; i < n; ++i) {
                block.scmhsa.wq.push_back(init_matrix(d, dh, rng));
                block.scmhsa.wk.push_back(init_matrix(d, dh, rng));
                block.scmhsa.wv.push_back(init_matrix(d, dh, rng));
            }
            block.scmhsa.wo = init_matrix(n * dh, d, rng);
        } else {
            const size_t dh = d / n;
            for (size_t i = 0; i < n; ++i) {
                block.mhsa.wq.push_back(init_matrix(dh, dh, rng));
                block.mhsa.wk.push_back(init_matrix(dh, dh, rng));
                block.mhsa.wv.push_back(init_matrix(dh, dh, rng));
            }
            block.mhsa.wo = init_matrix(d, d, rng);
        }
        block.ln1_gain = init_const_vector(d, 1.0);
        block.ln1_bias = init_const_vector(d, 0.0);
        block.ln2_gain = init_const_vector(d, 1.0);
        block.ln2_bias = init_const_vector(d, 0.0);
        block.ffn_w1 = init_matrix(d, f, rng);
        block.ffn_b1 = init_const_vector(f, 0.0);
        block.ffn_w2 = init_matrix(f, d, rng);
        block.ffn_b2 = init_const_vector(d, 0.0);
    }
    state.final_ln_gain = init_const_vector(d, 1.0);
    state.final_ln_bias = init_const_vector(d, 0.0);
    state.head_w1 = init_matrix(d, h, rng);
    state.head_b1 = init_const_vector(h, 0.0);
    state.head_w2 = init_matrix(h, d, rng);
    state.head_b2 = init_const_vector(d, 0.0);
    return state;
}

}  // namespace

ModelState init_model(const ModelConfig& config, Xoshiro256pp& rng) {
    return build_model(config, &rng);
}

ModelState empty_model(const ModelConfig& config) { return build_model(config, nullptr); }

ModelState clone_model(const ModelState& state) {
    ModelState copy = empty_model(state.config);
    auto src = state.named_tensors();
    auto dst = copy.named_tensors();
    for (size_t i = 0; i < src.size(); ++i) {
        auto to = dst[i].second.mutable_values();
        const auto from = src[i].second.values();
        std::copy(from.begin(), from.end(), to.begin());
    }
    return copy;
}

std::vector<std::pair<std::string, Tensor>> ModelState::named_tensors() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (size_t b = 0; b < blocks.size(); ++b) {
        const BlockState& block = blocks[b];
        const std::string prefix = "blocks." + std::to_string(b) + ".";
        const bool sc = config.variant == Variant::Scmhsa;
        const auto& wq = sc ? block.scmhsa.wq : block.mhsa.wq;
        const auto& wk = sc ? block.scmhsa.wk : block.mhsa.wk;
        const auto& wv = sc ? block.scmhsa.wv : block.mhsa.wv;
        for (size_t i = 0; i < wq.size(); ++i) {
            const std::string hs = std::to_string(i);
            out.emplace_back(prefix + "attn.q." + hs, wq[i]);
            out.emplace_back(prefix + "attn.k." + hs, wk[i]);
            out.emplace_back(prefix + "attn.v." + hs, wv[i]);
        }
        out.emplace_back(prefix + "attn.o", sc ? block.scmhsa.wo : block.mhsa.wo);
        out.emplace_back(prefix + "ln1.gain", block.ln1_gain);
        out.emplace_back(prefix + "ln1.bias", block.ln1_bias);
        out.emplace_back(prefix + "ln2.gain", block.ln2_gain);
        out.emplace_back(prefix + "ln2.bias", block.ln2_bias);
        out.emplace_back(prefix + "ffn.w1", block.ffn_w1);
        out.emplace_back(prefix + "ffn.b1", block.ffn_b1);
        out.emplace_back(prefix + "ffn.w2", block.ffn_w2);
        out.emplace_back(prefix + "ffn.b2", block.ffn_b2);
    }
    out.emplace_back("final_ln.gain", final_ln_gain);
    out.emplace_back("final_ln.bias", final_ln_bias);
    out.emplace_back("head.w1", head_w1);
    out.emplace_back("head.b1", head_b1);
    out.emplace_back("head.w2", head_w2);
    out.emplace_back("head.b2", head_b2);
    return out;
}

size_t ModelState::parameter_total() const {
    size_t total = 0;
    for (const auto& [name, t] : named_tensors()) total += t.numel();
    return total;
}

void ModelState::zero_grads() const {
    for (auto& [name, t] : named_tensors()) {
        Tensor tensor = t;
        tensor.zero_grad();
    }
}

Tensor positional_encoding(size_t m, size_t d) {
    if (d % 2 != 0) throw ShapeError("positional_encoding: d must be even");
    std::vector<double> values(m * d);
    for (size_t t = 0; t < m; ++t) {
        for (size_t i = 0; 2 * i < d; ++i) {
            const double rate =
                std::pow(10000.0, -(2.0 * static_cast<double>(i)) / static_cast<double>(d));
            const double angle = static_cast<double>(t) * rate;
            values[t * d + 2 * i] = std::sin(angle);
            values[t * d + 2 * i + 1] = std::cos(angle);
        }
    }
    return Tensor::from({m, d}, std::move(values));
}

namespace {

Tensor ffn_forward(const Tensor& x, const BlockState& block) {
    Tensor hidden = gelu(add_row_bias(matmul(x, block.ffn_w1), block.ffn_b1));
    return add_row_bias(matmul(hidden, block.ffn_w2), block.ffn_b2);
}

}  // namespace

EncodeResult encode(const Tensor& embeddings, const ModelState& state) {
    const ModelConfig& cfg = state.config;
    if (embeddings.cols() != cfg.d) throw ShapeError("encode: embedding width != d");

    EncodeResult result;
    Tensor x = add(embeddings, positional_encoding(embeddings.rows(), cfg.d));
    for (const BlockState& block : state.blocks) {
        Tensor normed = layer_norm(x, block.ln1_gain, block.ln1_bias);
        AttentionOutput attn = cfg.variant == Variant::Scmhsa
                                   ? scmhsa_forward(normed, block.scmhsa)
                                   : mhsa_forward(normed, block.mhsa);
        x = add(x, attn.final);
        x = add(x, ffn_forward(layer_norm(x, block.ln2_gain, block.ln2_bias), block));
        result.block_heads.push_back(std::move(attn.heads));
    }
    result.output = layer_norm(x, state.final_ln_gain, state.final_ln_bias);
    return result;
}

PredictResult predict_next(const Tensor& embeddings, const ModelState& state) {
    EncodeResult enc = encode(embeddings, state);
    Tensor last = take_row(enc.output, embeddings.rows() - 1);
    Tensor hidden = gelu(add_row_bias(matmul(last, state.head_w1), state.head_b1));
    PredictResult result;
    result.prediction = add_row_bias(matmul(hidden, state.head_w2), state.head_b2);
    result.block_heads = std::move(enc.block_heads);
    return result;
}

Tensor rollout(const Tensor& embeddings, size_t steps, const ModelState& state) {
    if (steps < 1) throw ConfigError("rollout: steps must be >= 1");
    NoGradGuard no_grad;
    const size_t m = embeddings.rows(), d = embeddings.cols();
    std::vector<double> window(embeddings.values().begin(), embeddings.values().end());
    std::vector<double> predictions;
    predictions.reserve(steps * d);
    for (size_t s = 0; s < steps; ++s) {
        Tensor input = Tensor::from({m, d}, window);
        Tensor pred = predict_next(input, state).prediction;
        predictions.insert(predictions.end(), pred.values().begin(), pred.values().end());
        // drop the oldest row, append the prediction
        std::copy(window.begin() + d, window.end(), window.begin());
        std::copy(pred.values().begin(), pred.values().end(), window.end() - d);
    }
    return Tensor::from({steps, d}, std::move(predictions));
}

ParamCountTable param_count(const ModelConfig& config) {
    config.validate();
    const size_t d = config.d;
    const size_t f = config.resolved_ffn_width();
    const size_t h = config.resolved_head_hidden();

    const size_t attn = config.variant == Variant::Scmhsa
                            ? scmhsa_param_count(d, config.n_heads, config.resolved_d_head())
                            : mhsa_param_count(d, config.n_heads);
    const size_t norms = 2 * (2 * d);
    const size_t ffn = d * f + f + f * d + d;
    const size_t per_block = attn + norms + ffn;

    ParamCountTable table;
    table.rows.push_back({"attention (per block)", attn});
    table.rows.push_back({"layer norms (per block)", norms});
    table.rows.push_back({"feed-forward (per block)", ffn});
    table.rows.push_back({"encoder blocks total", per_block * config.blocks});
    table.rows.push_back({"final layer norm", 2 * d});
    table.rows.push_back({"prediction head", d * h + h + h * d + d});
    table.total = per_block * config.blocks + 2 * d + (d * h + h + h * d + d);
    return table;
}

}  // namespace scvfp
