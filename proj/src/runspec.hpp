#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "model.hpp"

namespace scvfp {

struct TrainConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    size_t batch = 32;
    size_t epochs = 25;
    uint64_t seed = 2023;
    double grad_clip = 0.0;  // global-norm clip, 0 disables

    void validate() const;
};

struct DataConfig {
    std::string path;
    size_t stride = 5;
    std::array<double, 3> split_ratios{0.7, 0.15, 0.15};
    bool split_by_sequence = false;
    bool disjoint_windows = false;

    void validate() const;
};

// The full description of a run: model + training + data handling. Parsed
// from JSON with unknown keys rejected; serialized canonically (sorted keys,
// defaults resolved) so a given run has exactly one config text and hash.
struct RunSpec {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;

    static RunSpec from_json_text(const std::string& text);
    static RunSpec from_json_file(const std::string& path);

    std::string canonical_json() const;
    uint64_t hash() const;  // FNV-1a of canonical_json()
    void validate() const;
};

}  // namespace scvfp
