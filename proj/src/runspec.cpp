#include "runspec.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "textio.hpp"

namespace scvfp {

using nlohmann::json;

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train config: lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("train config: betas must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("train config: eps must be > 0");
    if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be >= 0");
    if (batch < 1) throw ConfigError("train config: batch must be >= 1");
    if (grad_clip < 0.0) throw ConfigError("train config: grad_clip must be >= 0");
}

void DataConfig::validate() const {
    if (stride < 1) throw ConfigError("data config: stride must be >= 1");
    const double total = split_ratios[0] + split_ratios[1] + split_ratios[2];
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("data config: split ratios must sum to 1");
    for (double r : split_ratios)
        if (r < 0.0) throw ConfigError("data config: split ratios must be >= 0");
}

void RunSpec::validate() const {
    model.validate();
    train.validate();
    data.validate();
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key))
            throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

void parse_model(const json& obj, ModelConfig& cfg) {
    reject_unknown_keys(obj,
                        {"d", "m", "n_heads", "d_head", "blocks", "ffn_width", "head_hidden",
                         "variant", "lambda", "precision"},
                        "model");
    read_field(obj, "d", cfg.d);
    read_field(obj, "m", cfg.m);
    read_field(obj, "n_heads", cfg.n_heads);
    read_field(obj, "d_head", cfg.d_head);
    read_field(obj, "blocks", cfg.blocks);
    read_field(obj, "ffn_width", cfg.ffn_width);
    read_field(obj, "head_hidden", cfg.head_hidden);
    read_field(obj, "lambda", cfg.lambda);
    read_field(obj, "precision", cfg.precision);
    if (obj.contains("variant")) cfg.variant = variant_from_name(obj.at("variant").get<std::string>());
}

void parse_train(const json& obj, TrainConfig& cfg) {
    reject_unknown_keys(obj,
                        {"lr", "beta1", "beta2", "eps", "weight_decay", "batch", "epochs", "seed",
                         "grad_clip"},
                        "train");
    read_field(obj, "lr", cfg.lr);
    read_field(obj, "beta1", cfg.beta1);
    read_field(obj, "beta2", cfg.beta2);
    read_field(obj, "eps", cfg.eps);
    read_field(obj, "weight_decay", cfg.weight_decay);
    read_field(obj, "batch", cfg.batch);
    read_field(obj, "epochs", cfg.epochs);
    read_field(obj, "seed", cfg.seed);
    read_field(obj, "grad_clip", cfg.grad_clip);
}

void parse_data(const json& obj, DataConfig& cfg) {
    reject_unknown_keys(
        obj, {"path", "stride", "split", "split_by_sequence", "disjoint_windows"}, "data");
    read_field(obj, "path", cfg.path);
    read_field(obj, "stride", cfg.stride);
    read_field(obj, "split_by_sequence", cfg.split_by_sequence);
    read_field(obj, "disjoint_windows", cfg.disjoint_windows);
    if (obj.contains("split")) {
        const json& arr = obj.at("split");
        if (!arr.is_array() || arr.size() != 3)
            throw ConfigError("config: 'split' must be an array of three ratios");
        for (size_t i = 0; i < 3; ++i) cfg.split_ratios[i] = arr[i].get<double>();
    }
}

}  // namespace

RunSpec RunSpec::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(root, {"model", "train", "data"}, "top level");

    RunSpec spec;
    if (root.contains("model")) parse_model(root.at("model"), spec.model);
    if (root.contains("train")) parse_train(root.at("train"), spec.train);
    if (root.contains("data")) parse_data(root.at("data"), spec.data);
    spec.validate();
    return spec;
}

RunSpec RunSpec::from_json_file(const std::string& path) {
    return from_json_text(read_text_file(path));
}

std::string RunSpec::canonical_json() const {
    json root;
    root["model"] = {
        {"d", model.d},
        {"m", model.m},
        {"n_heads", model.n_heads},
        {"d_head", model.resolved_d_head()},
        {"blocks", model.blocks},
        {"ffn_width", model.resolved_ffn_width()},
        {"head_hidden", model.resolved_head_hidden()},
        {"variant", variant_name(model.variant)},
        {"lambda", model.lambda},
        {"precision", model.precision},
    };
    root["train"] = {
        {"lr", train.lr},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"eps", train.eps},
        {"weight_decay", train.weight_decay},
        {"batch", train.batch},
        {"epochs", train.epochs},
        {"seed", train.seed},
        {"grad_clip", train.grad_clip},
    };
    root["data"] = {
        {"path", data.path},
        {"stride", data.stride},
        {"split", data.split_ratios},
        {"split_by_sequence", data.split_by_sequence},
        {"disjoint_windows", data.disjoint_windows},
    };
    return root.dump();
}

uint64_t RunSpec::hash() const { return fnv1a64_str(canonical_json()); }

}  // namespace scvfp
