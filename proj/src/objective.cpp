#include "objective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace scvfp {

Tensor embedding_mse(const Tensor& truth, const Tensor& predicted) {
    if (truth.numel() != predicted.numel() || truth.shape() != predicted.shape())
        throw ShapeError("embedding_mse: width mismatch");
    return sqnorm(sub(truth, predicted));
}

Tensor semantic_similarity_loss(const std::vector<std::vector<Tensor>>& block_heads,
                                double* min_abs_cos) {
    if (min_abs_cos) *min_abs_cos = 1.0;
    Tensor acc;
    size_t contributing_blocks = 0;
    for (const auto& heads : block_heads) {
        const size_t n = heads.size();
        if (n == 0) throw ShapeError("semantic_similarity_loss: empty block");
        ++contributing_blocks;
        if (n < 2) continue;  // single head: nothing to compare, block adds 0
        for (size_t i = 0; i < n; ++i)
            if (heads[i].shape() != heads[0].shape())
                throw ShapeError("semantic_similarity_loss: inconsistent head shapes");
        Tensor pair_sum;
        for (size_t i = 0; i + 1 < n; ++i) {
            for (size_t j = i + 1; j < n; ++j) {
                double pair_min = 1.0;
                Tensor term = row_abs_cosine_mean(heads[i], heads[j], &pair_min);
                if (min_abs_cos) *min_abs_cos = std::min(*min_abs_cos, pair_min);
                pair_sum = pair_sum.defined() ? add(pair_sum, term) : term;
            }
        }
        const double prefactor = 1.0 / static_cast<double>(n * (n - 1));
        Tensor block_term = scalar_mul(pair_sum, prefactor);
        acc = acc.defined() ? add(acc, block_term) : block_term;
    }
    if (!acc.defined()) return Tensor::scalar(0.0);
    return scalar_mul(acc, 1.0 / static_cast<double>(contributing_blocks));
}

LossBreakdown total_loss(const Tensor& truth, const Tensor& predicted,
                         const std::vector<std::vector<Tensor>>& block_heads, double lambda,
                         double* min_abs_cos) {
    if (lambda < 0.0) throw ConfigError("total_loss: lambda must be >= 0");
    LossBreakdown breakdown;
    breakdown.lambda = lambda;
    breakdown.mse_term = embedding_mse(truth, predicted);
    breakdown.ss_term = semantic_similarity_loss(block_heads, min_abs_cos);
    breakdown.total = add(breakdown.mse_term, scalar_mul(breakdown.ss_term, lambda));
    return breakdown;
}

double metric_psnr(double mse) {
    if (!(mse > 0.0)) throw NumericError("metric_psnr: undefined for mse <= 0");
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("cosine_similarity: width mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-8 || nb < 1e-8) return 0.0;
    return dot / (na * nb);
}

ErrorMap error_map(std::span<const double> truth, std::span<const double> predicted,
                   size_t grid_cols) {
    if (truth.size() != predicted.size()) throw ShapeError("error_map: width mismatch");
    if (grid_cols == 0) throw ShapeError("error_map: grid_cols must be >= 1");
    const size_t d = truth.size();
    ErrorMap map;
    map.cols = grid_cols;
    map.rows = (d + grid_cols - 1) / grid_cols;
    map.values.assign(map.rows * map.cols, 0.0);  // zero padding past d
    double max_err = 0.0;
    for (size_t i = 0; i < d; ++i) {
        map.values[i] = std::abs(truth[i] - predicted[i]);
        max_err = std::max(max_err, map.values[i]);
    }
    map.normalized.assign(map.values.size(), 0);
    if (max_err > 0.0) {
        for (size_t i = 0; i < map.values.size(); ++i)
            map.normalized[i] =
                static_cast<uint8_t>(std::lround(map.values[i] / max_err * 255.0));
    }
    return map;
}

void write_pgm(const std::string& path, size_t rows, size_t cols,
               std::span<const uint8_t> pixels) {
    if (pixels.size() != rows * cols) throw ShapeError("write_pgm: pixel count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open " + path);
    out << "P5\n" << cols << " " << rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write_pgm: short write to " + path);
}

std::span<const MsePsnrRow> builtin_psnr_fixture() {
    // Seven predictors x four benchmarks (KTH, UCSD, UCF Sports, Penn Action).
    static const MsePsnrRow rows[] = {
        {359.82, 22.57}, {350.82, 22.68}, {507.08, 21.08}, {633.99, 20.11},  // PredRNN
        {248.36, 24.18}, {255.91, 24.05}, {380.26, 22.33}, {425.68, 21.84},  // SA-ConvLSTM
        {154.91, 26.23}, {154.91, 26.23}, {217.81, 24.75}, {247.79, 24.19},  // MIMO-VP
        {133.07, 26.89}, {168.30, 25.87}, {197.73, 25.17}, {278.66, 23.68},  // LFDM
        {49.90, 31.15},  {100.71, 28.10}, {134.30, 26.84}, {185.41, 25.45},  // VFP-ImageEvent
        {95.30, 28.34},  {125.92, 27.13}, {110.17, 27.71}, {199.56, 25.13},  // ExtDM
        {79.81, 29.11},  {86.71, 28.75},  {79.63, 29.12},  {109.92, 27.72},  // SC-VFP
    };
    return rows;
}

PsnrTableCheck verify_psnr_rows(std::span<const MsePsnrRow> rows) {
    if (rows.empty()) throw FormatError("verify_psnr_rows: no rows");
    PsnrTableCheck check;
    check.rows = rows.size();
    for (size_t i = 0; i < rows.size(); ++i) {
        const double dev = std::abs(metric_psnr(rows[i].mse) - rows[i].psnr);
        if (dev > check.max_abs_deviation_db) {
            check.max_abs_deviation_db = dev;
            check.worst_row = i;
        }
    }
    return check;
}

}  // namespace scvfp
