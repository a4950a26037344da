#include "checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "runspec.hpp"

namespace scvfp {

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

struct Reader {
    const uint8_t* data;
    size_t size;
    size_t pos = 0;
    std::string origin;

    void need(size_t n) {
        if (size - pos < n) throw FormatError(origin + ": truncated checkpoint");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = static_cast<uint32_t>(data[pos]) | static_cast<uint32_t>(data[pos + 1]) << 8 |
                     static_cast<uint32_t>(data[pos + 2]) << 16 |
                     static_cast<uint32_t>(data[pos + 3]) << 24;
        pos += 4;
        return v;
    }
    uint64_t u64() {
        const uint64_t lo = u32();
        return lo | static_cast<uint64_t>(u32()) << 32;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

std::vector<uint8_t> checkpoint_bytes(const Checkpoint& ckpt) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'S', 'C', 'V', 'F'});
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<uint32_t>(ckpt.config_json.size()));
    out.insert(out.end(), ckpt.config_json.begin(), ckpt.config_json.end());
    put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
    for (const CheckpointTensor& t : ckpt.tensors) {
        put_u32(out, static_cast<uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_u32(out, static_cast<uint32_t>(t.shape.size()));
        for (size_t e : t.shape) put_u32(out, static_cast<uint32_t>(e));
        for (float v : t.values) put_u32(out, std::bit_cast<uint32_t>(v));
    }
    put_u32(out, ckpt.final_epoch);
    for (uint64_t s : ckpt.prng_state) put_u64(out, s);
    return out;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::vector<uint8_t> bytes = checkpoint_bytes(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_checkpoint: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_checkpoint: short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SCVF", 4) != 0)
        throw FormatError(path + ": bad magic (not a checkpoint)");
    Reader reader{bytes.data() + 4, bytes.size() - 4, 0, path};
    const uint32_t version = reader.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.config_json = reader.str(reader.u32());
    const uint32_t count = reader.u32();
    ckpt.tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        CheckpointTensor t;
        t.name = reader.str(reader.u32());
        const uint32_t rank = reader.u32();
        if (rank == 0 || rank > 3) throw FormatError(path + ": bad tensor rank");
        size_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            t.shape.push_back(reader.u32());
            numel *= t.shape.back();
        }
        t.values.resize(numel);
        for (float& v : t.values) v = reader.f32();
        ckpt.tensors.push_back(std::move(t));
    }
    ckpt.final_epoch = reader.u32();
    for (uint64_t& s : ckpt.prng_state) s = reader.u64();
    if (reader.pos != reader.size) throw FormatError(path + ": trailing bytes after payload");
    return ckpt;
}

Checkpoint snapshot_model(const ModelState& state, const std::string& config_json,
                          uint32_t final_epoch, const std::array<uint64_t, 4>& prng_state) {
    Checkpoint ckpt;
    ckpt.config_json = config_json;
    ckpt.final_epoch = final_epoch;
    ckpt.prng_state = prng_state;
    for (const auto& [name, tensor] : state.named_tensors()) {
        CheckpointTensor t;
        t.name = name;
        t.shape = tensor.shape();
        t.values.reserve(tensor.numel());
        for (double v : tensor.values()) t.values.push_back(static_cast<float>(v));
        ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
}

ModelState restore_model(const Checkpoint& ckpt) {
    const RunSpec spec = RunSpec::from_json_text(ckpt.config_json);
    ModelState state = empty_model(spec.model);
    auto named = state.named_tensors();
    if (named.size() != ckpt.tensors.size())
        throw FormatError("checkpoint: tensor count does not match config");
    for (size_t i = 0; i < named.size(); ++i) {
        const CheckpointTensor& stored = ckpt.tensors[i];
        Tensor target = named[i].second;
        if (stored.name != named[i].first)
            throw FormatError("checkpoint: tensor '" + stored.name + "' out of order, expected '" +
                              named[i].first + "'");
        if (stored.shape != target.shape())
            throw FormatError("checkpoint: shape mismatch for '" + stored.name + "'");
        auto out = target.mutable_values();
        for (size_t j = 0; j < out.size(); ++j) out[j] = static_cast<double>(stored.values[j]);
    }
    return state;
}

}  // namespace scvfp
