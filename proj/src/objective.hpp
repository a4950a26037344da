#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace scvfp {

// Training losses and evaluation metrics, all in embedding space.

struct LossBreakdown {
    Tensor mse_term;   // scalar
    Tensor ss_term;    // scalar
    Tensor total;      // scalar: mse + lambda * ss
    double lambda = 0.0;
};

// Squared L2 distance, summed over dimensions (not averaged).
Tensor embedding_mse(const Tensor& truth, const Tensor& predicted);

// Mean absolute row-wise cosine similarity over unordered head pairs with a
// 1/(N(N-1)) prefactor, averaged over blocks. Bounded in [0, 0.5]; returns a
// zero constant for single-head blocks. min_abs_cos, when given, receives
// the smallest |cos| encountered (1.0 if nothing was compared).
Tensor semantic_similarity_loss(const std::vector<std::vector<Tensor>>& block_heads,
                                double* min_abs_cos = nullptr);

LossBreakdown total_loss(const Tensor& truth, const Tensor& predicted,
                         const std::vector<std::vector<Tensor>>& block_heads, double lambda,
                         double* min_abs_cos = nullptr);

// 10*log10(255^2 / mse); mse <= 0 is a NumericError (callers surface the
// mse == 0 case as a +inf sentinel).
double metric_psnr(double mse);

// Plain-value cosine between two vectors, 0 when either norm < 1e-8.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct ErrorMap {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;       // |e_i - p_i|, zero-padded row-major
    std::vector<uint8_t> normalized;  // max-normalized to 0..255 (max -> 255)
};

ErrorMap error_map(std::span<const double> truth, std::span<const double> predicted,
                   size_t grid_cols);

// Binary PGM (P5, maxval 255).
void write_pgm(const std::string& path, size_t rows, size_t cols,
               std::span<const uint8_t> pixels);

// Reference (MSE, PSNR-dB) rows bundled for `verify-psnr-table`: seven
// published predictors evaluated on four benchmarks.
struct MsePsnrRow {
    double mse;
    double psnr;
};

std::span<const MsePsnrRow> builtin_psnr_fixture();

struct PsnrTableCheck {
    size_t rows = 0;
    double max_abs_deviation_db = 0.0;
    size_t worst_row = 0;
};

PsnrTableCheck verify_psnr_rows(std::span<const MsePsnrRow> rows);

}  // namespace scvfp
