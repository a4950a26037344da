#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scvfp {

// Shortest round-trip decimal for a double (printf %.17g trimmed), so CSV
// values compare exactly across writers.
std::string format_double(double v);

// FNV-1a 64-bit, used wherever a stable content hash is printed.
uint64_t fnv1a64(std::span<const uint8_t> bytes);
uint64_t fnv1a64_str(const std::string& text);
std::string hash_hex(uint64_t h);
uint64_t hash_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Minimal CSV emitter: optional comment lines (prefixed '#'), one header
// row, then data rows. Doubles go through format_double.
class CsvWriter {
public:
    void comment(const std::string& line) { comments_.push_back(line); }
    void header(std::vector<std::string> columns) { header_ = std::move(columns); }
    void row(std::vector<std::string> cells);
    std::string str() const;
    void save(const std::string& path) const;

private:
    std::vector<std::string> comments_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace scvfp
