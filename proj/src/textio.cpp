#include "textio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "errors.hpp"

namespace scvfp {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    // Find the shortest precision that round-trips.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double parsed = 0.0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

uint64_t fnv1a64(std::span<const uint8_t> bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

uint64_t fnv1a64_str(const std::string& text) {
    return fnv1a64({reinterpret_cast<const uint8_t*>(text.data()), text.size()});
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path);
    out << content;
    if (!out) throw IoError("short write to " + path);
}

void CsvWriter::row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

std::string CsvWriter::str() const {
    std::string out;
    for (const auto& c : comments_) out += "# " + c + "\n";
    auto append_row = [&out](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    if (!header_.empty()) append_row(header_);
    for (const auto& r : rows_) append_row(r);
    return out;
}

void CsvWriter::save(const std::string& path) const { write_text_file(path, str()); }

}  // namespace scvfp
