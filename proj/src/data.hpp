#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace scvfp {

// Embedding-sequence container and its on-disk ESEQ1 format:
//   magic "ESEQ" | version u32=1 | d u32 | sequence_count u32 |
//   per sequence: length T u32, then T*d float32 values
// All integers and floats little-endian.

struct EmbeddingSequences {
    uint32_t d = 0;
    std::vector<std::vector<float>> sequences;  // each T*d row-major

    size_t sequence_length(size_t idx) const { return sequences[idx].size() / d; }
};

void write_eseq(const std::string& path, const EmbeddingSequences& data);
EmbeddingSequences read_eseq(const std::string& path);

// Serialized bytes (used for hashing and round-trip checks).
std::vector<uint8_t> eseq_bytes(const EmbeddingSequences& data);

struct SyntheticConfig {
    uint32_t d = 32;               // must be even
    uint32_t num_sequences = 64;
    uint32_t length = 128;
    std::vector<double> angles;    // rotation per 2-D plane, d/2 entries
    double sigma = 0.05;           // observation noise
    uint64_t seed = 2023;
};

// Latent z_0 ~ N(0, I); z_{t+1} = R z_t with R block-diagonal 2x2 rotations;
// frames are z_t plus N(0, sigma^2) noise, stored at float32. Same config =
// same bytes.
EmbeddingSequences generate_synthetic(const SyntheticConfig& config);

// Angle sets for the CLI's --theta-max flag: d/2 draws from
// uniform[0, theta_max), seeded independently of the frame noise stream.
std::vector<double> derive_plane_angles(uint32_t d, double theta_max, uint64_t seed);

// One training instance: M strided input frames plus the label one stride
// after the last input. Frames are materialized on demand from the store.
struct WindowInstance {
    uint32_t sequence = 0;
    uint32_t start = 0;
    uint32_t stride = 1;
};

class WindowedDataset {
public:
    WindowedDataset(EmbeddingSequences data, size_t m, size_t stride, bool disjoint_only = false);

    size_t size() const { return windows_.size(); }
    size_t d() const { return data_.d; }
    size_t m() const { return m_; }
    const EmbeddingSequences& store() const { return data_; }
    const WindowInstance& window(size_t idx) const { return windows_[idx]; }

    Tensor inputs(size_t idx) const;  // [M, d]
    Tensor label(size_t idx) const;   // [1, d]

private:
    EmbeddingSequences data_;
    size_t m_;
    size_t stride_;
    std::vector<WindowInstance> windows_;
};

struct SplitIndices {
    std::vector<size_t> train, val, test;
};

// Seeded Fisher-Yates shuffle, then contiguous cuts: train and val take the
// floors of their ratios, test takes the rest.
SplitIndices split_instances(size_t count, const std::array<double, 3>& ratios, uint64_t seed);

// Same cut applied at sequence granularity; windows follow their sequence.
SplitIndices split_by_sequence(const WindowedDataset& dataset,
                               const std::array<double, 3>& ratios, uint64_t seed);

// CSV ingestion: one frame per line, d comma-separated decimals, blank lines
// separate sequences. Values parse directly to float32.
EmbeddingSequences read_embedding_csv(const std::string& path);

}  // namespace scvfp
