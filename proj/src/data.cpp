#include "data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace scvfp {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_f32(std::vector<uint8_t>& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size, std::string origin)
        : data_(data), size_(size), origin_(std::move(origin)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = static_cast<uint32_t>(data_[pos_]) |
                     static_cast<uint32_t>(data_[pos_ + 1]) << 8 |
                     static_cast<uint32_t>(data_[pos_ + 2]) << 16 |
                     static_cast<uint32_t>(data_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    void bytes(void* dst, size_t n) {
        need(n);
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    size_t remaining() const { return size_ - pos_; }

private:
    void need(size_t n) {
        if (size_ - pos_ < n) throw FormatError(origin_ + ": truncated file");
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    std::string origin_;
};

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

constexpr uint32_t kEseqVersion = 1;

}  // namespace

std::vector<uint8_t> eseq_bytes(const EmbeddingSequences& data) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'E', 'S', 'E', 'Q'});
    put_u32(out, kEseqVersion);
    put_u32(out, data.d);
    put_u32(out, static_cast<uint32_t>(data.sequences.size()));
    for (const auto& seq : data.sequences) {
        put_u32(out, static_cast<uint32_t>(seq.size() / data.d));
        for (float v : seq) put_f32(out, v);
    }
    return out;
}

void write_eseq(const std::string& path, const EmbeddingSequences& data) {
    if (data.d == 0) throw FormatError("write_eseq: d must be >= 1");
    for (const auto& seq : data.sequences)
        if (seq.size() % data.d != 0)
            throw FormatError("write_eseq: sequence length not a multiple of d");
    const std::vector<uint8_t> bytes = eseq_bytes(data);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_eseq: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_eseq: short write to " + path);
}

EmbeddingSequences read_eseq(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "ESEQ", 4) != 0)
        throw FormatError(path + ": bad magic (not an ESEQ file)");
    ByteReader reader(bytes.data() + 4, bytes.size() - 4, path);
    const uint32_t version = reader.u32();
    if (version != kEseqVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    EmbeddingSequences data;
    data.d = reader.u32();
    if (data.d == 0) throw FormatError(path + ": d must be >= 1");
    const uint32_t count = reader.u32();
    data.sequences.reserve(count);
    for (uint32_t s = 0; s < count; ++s) {
        const uint32_t t = reader.u32();
        std::vector<float> seq(static_cast<size_t>(t) * data.d);
        for (float& v : seq) v = reader.f32();
        data.sequences.push_back(std::move(seq));
    }
    if (reader.remaining() != 0) throw FormatError(path + ": trailing bytes after payload");
    return data;
}

EmbeddingSequences generate_synthetic(const SyntheticConfig& config) {
    if (config.d % 2 != 0) throw ConfigError("generate_synthetic: d must be even");
    const size_t planes = config.d / 2;
    if (config.angles.size() != planes)
        throw ConfigError("generate_synthetic: need one angle per 2-D plane (d/2)");
    if (config.sigma < 0.0) throw ConfigError("generate_synthetic: sigma must be >= 0");

    std::vector<double> cosines(planes), sines(planes);
    for (size_t p = 0; p < planes; ++p) {
        cosines[p] = std::cos(config.angles[p]);
        sines[p] = std::sin(config.angles[p]);
    }

    Xoshiro256pp rng(config.seed);
    EmbeddingSequences data;
    data.d = config.d;
    data.sequences.reserve(config.num_sequences);
    std::vector<double> z(config.d);
    for (uint32_t s = 0; s < config.num_sequences; ++s) {
        for (double& v : z) v = rng.next_gaussian();
        std::vector<float> seq(static_cast<size_t>(config.length) * config.d);
        for (uint32_t t = 0; t < config.length; ++t) {
            float* frame = seq.data() + static_cast<size_t>(t) * config.d;
            if (config.sigma > 0.0) {
                for (uint32_t i = 0; i < config.d; ++i)
                    frame[i] = static_cast<float>(z[i] + config.sigma * rng.next_gaussian());
            } else {
                for (uint32_t i = 0; i < config.d; ++i) frame[i] = static_cast<float>(z[i]);
            }
            for (size_t p = 0; p < planes; ++p) {
                const double a = z[2 * p], b = z[2 * p + 1];
                z[2 * p] = cosines[p] * a - sines[p] * b;
                z[2 * p + 1] = sines[p] * a + cosines[p] * b;
            }
        }
        data.sequences.push_back(std::move(seq));
    }
    return data;
}

std::vector<double> derive_plane_angles(uint32_t d, double theta_max, uint64_t seed) {
    if (d % 2 != 0) throw ConfigError("derive_plane_angles: d must be even");
    if (theta_max < 0.0) throw ConfigError("derive_plane_angles: theta_max must be >= 0");
    // Separate stream from the generator's z/noise draws.
    Xoshiro256pp rng(seed ^ 0x414E474C4553ULL);
    std::vector<double> angles(d / 2);
    for (double& a : angles) a = theta_max > 0.0 ? rng.next_uniform(0.0, theta_max) : 0.0;
    return angles;
}

WindowedDataset::WindowedDataset(EmbeddingSequences data, size_t m, size_t stride,
                                 bool disjoint_only)
    : data_(std::move(data)), m_(m), stride_(stride) {
    if (m_ < 1) throw ConfigError("windows: M must be >= 1");
    if (stride_ < 1) throw ConfigError("windows: stride must be >= 1");
    const size_t span = m_ * stride_;  // label sits at start + M*stride
    for (size_t s = 0; s < data_.sequences.size(); ++s) {
        const size_t t = data_.sequence_length(s);
        if (t < span + 1) continue;  // too short for a single window
        const size_t step = disjoint_only ? span + 1 : 1;
        for (size_t start = 0; start + span < t; start += step) {
            windows_.push_back({static_cast<uint32_t>(s), static_cast<uint32_t>(start),
                                static_cast<uint32_t>(stride_)});
        }
    }
}

Tensor WindowedDataset::inputs(size_t idx) const {
    const WindowInstance& w = windows_[idx];
    const std::vector<float>& seq = data_.sequences[w.sequence];
    std::vector<double> values(m_ * data_.d);
    for (size_t i = 0; i < m_; ++i) {
        const float* frame = seq.data() + (w.start + i * w.stride) * data_.d;
        for (size_t j = 0; j < data_.d; ++j)
            values[i * data_.d + j] = static_cast<double>(frame[j]);
    }
    return Tensor::from({m_, static_cast<size_t>(data_.d)}, std::move(values));
}

Tensor WindowedDataset::label(size_t idx) const {
    const WindowInstance& w = windows_[idx];
    const std::vector<float>& seq = data_.sequences[w.sequence];
    const float* frame = seq.data() + (w.start + m_ * w.stride) * data_.d;
    std::vector<double> values(data_.d);
    for (size_t j = 0; j < data_.d; ++j) values[j] = static_cast<double>(frame[j]);
    return Tensor::from({1, static_cast<size_t>(data_.d)}, std::move(values));
}

SplitIndices split_instances(size_t count, const std::array<double, 3>& ratios, uint64_t seed) {
    if (count == 0) throw ConfigError("split: empty instance set");
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");

    std::vector<size_t> order(count);
    for (size_t i = 0; i < count; ++i) order[i] = i;
    Xoshiro256pp rng(seed);
    rng.shuffle(order);

    const size_t n_train = static_cast<size_t>(ratios[0] * static_cast<double>(count));
    const size_t n_val = static_cast<size_t>(ratios[1] * static_cast<double>(count));
    SplitIndices split;
    split.train.assign(order.begin(), order.begin() + n_train);
    split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    split.test.assign(order.begin() + n_train + n_val, order.end());
    return split;
}

SplitIndices split_by_sequence(const WindowedDataset& dataset,
                               const std::array<double, 3>& ratios, uint64_t seed) {
    // Collect the sequences that actually produced windows, in id order.
    std::vector<uint32_t> seq_ids;
    for (size_t i = 0; i < dataset.size(); ++i) {
        const uint32_t s = dataset.window(i).sequence;
        if (seq_ids.empty() || seq_ids.back() != s) seq_ids.push_back(s);
    }
    if (seq_ids.empty()) throw ConfigError("split: empty instance set");
    const SplitIndices seq_split = split_instances(seq_ids.size(), ratios, seed);

    std::vector<int> bucket_of(seq_ids.size(), 2);
    for (size_t i : seq_split.train) bucket_of[i] = 0;
    for (size_t i : seq_split.val) bucket_of[i] = 1;

    SplitIndices split;
    for (size_t i = 0; i < dataset.size(); ++i) {
        const uint32_t s = dataset.window(i).sequence;
        const size_t pos =
            std::lower_bound(seq_ids.begin(), seq_ids.end(), s) - seq_ids.begin();
        switch (bucket_of[pos]) {
            case 0: split.train.push_back(i); break;
            case 1: split.val.push_back(i); break;
            default: split.test.push_back(i); break;
        }
    }
    return split;
}

EmbeddingSequences read_embedding_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    EmbeddingSequences data;
    std::vector<float> current;
    size_t width = 0;
    std::string line;
    size_t line_no = 0;
    auto flush_sequence = [&] {
        if (!current.empty()) {
            data.sequences.push_back(std::move(current));
            current.clear();
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush_sequence();
            continue;
        }
        if (line[0] == '#') continue;
        std::stringstream row(line);
        std::string cell;
        size_t cells = 0;
        while (std::getline(row, cell, ',')) {
            try {
                size_t used = 0;
                const float v = std::stof(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                current.push_back(v);
            } catch (const std::exception&) {
                throw FormatError(path + ": line " + std::to_string(line_no) +
                                  ": not a number: '" + cell + "'");
            }
            ++cells;
        }
        if (width == 0) width = cells;
        if (cells != width)
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": expected " + std::to_string(width) + " values, got " +
                              std::to_string(cells));
    }
    flush_sequence();
    if (width == 0) throw FormatError(path + ": no frames found");
    data.d = static_cast<uint32_t>(width);
    return data;
}

}  // namespace scvfp
