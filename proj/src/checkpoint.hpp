#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace scvfp {

// On-disk SCVF format, all little-endian:
//   magic "SCVF" | version u32=1 | config u32 len + canonical JSON bytes |
//   tensor_count u32 | per tensor (name u32 len + bytes, rank u32,
//   extents u32[rank], values f32[numel]) | final_epoch u32 |
//   prng_state u64[4]
// Parameters are kept on the float32 lattice in memory, so save -> load is
// lossless and reload reproduces evaluation metrics bit-exactly.

struct CheckpointTensor {
    std::string name;
    std::vector<size_t> shape;
    std::vector<float> values;
};

struct Checkpoint {
    std::string config_json;  // canonical RunSpec text
    std::vector<CheckpointTensor> tensors;
    uint32_t final_epoch = 0;
    std::array<uint64_t, 4> prng_state{};
};

std::vector<uint8_t> checkpoint_bytes(const Checkpoint& ckpt);
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

Checkpoint snapshot_model(const ModelState& state, const std::string& config_json,
                          uint32_t final_epoch, const std::array<uint64_t, 4>& prng_state);

// Rebuilds the model from the embedded config and tensor table.
ModelState restore_model(const Checkpoint& ckpt);

}  // namespace scvfp
