#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "data.hpp"
#include "model.hpp"
#include "runspec.hpp"

namespace scvfp {

// Decoupled-weight-decay Adam step on one parameter vector: theta shrinks by
// lr*wd*theta first, then moves by -lr * m_hat / (sqrt(v_hat) + eps) with
// bias-corrected moments. t counts steps starting at 1. Updated parameters
// are snapped to the float32 lattice so checkpoints stay lossless.
void adamw_apply(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, uint64_t t, const TrainConfig& cfg);

class AdamW {
public:
    AdamW(std::vector<Tensor> params, TrainConfig cfg);

    // Applies one update from the gradients currently held by the parameters.
    void step();
    uint64_t steps_taken() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    TrainConfig cfg_;
    uint64_t t_ = 0;
};

struct EpochStats {
    size_t epoch = 0;
    double train_mse = 0.0;
    double train_ss = 0.0;
    double train_total = 0.0;
    double val_mse = 0.0;
    double val_psnr = 0.0;
    double seconds = 0.0;  // wall time; excluded from determinism comparisons
};

struct RunHistory {
    std::vector<EpochStats> epochs;
};

std::string history_csv(const RunHistory& history, uint64_t runspec_hash);

struct MetricReport {
    double mse = 0.0;
    double psnr = 0.0;  // +inf sentinel when mse == 0
    double mean_cosine = 0.0;
    double persistence_mse = 0.0;  // predict-the-last-input floor
    std::vector<double> cosine_by_step;
    size_t windows = 0;
};

// Assembles the headline numbers; split out so the mse == 0 branch is
// directly testable.
MetricReport make_metric_report(double mse, double mean_cosine, double persistence_mse,
                                std::vector<double> cosine_by_step, size_t windows);

// Mean embedding MSE / PSNR / cosine over the given windows, plus per-step
// rollout cosines (step j uses the ground-truth frame one stride past step
// j-1; windows too short for a step are skipped for it). rollout_steps == 0
// skips rollouts entirely.
MetricReport evaluate(const ModelState& model, const WindowedDataset& dataset,
                      std::span<const size_t> indices, size_t rollout_steps = 5);

// Deterministic dataset split for a run: the spec seed feeds a splitmix64
// chain whose draws are reserved, in order, for weight init, the split, and
// epoch shuffles.
SplitIndices derive_split(const RunSpec& spec, const WindowedDataset& dataset);

struct TrainResult {
    Checkpoint final_checkpoint;
    Checkpoint best_checkpoint;  // lowest validation MSE (final when no val split)
    RunHistory history;
};

using LogFn = std::function<void(const std::string&)>;

TrainResult train(const RunSpec& spec, const WindowedDataset& dataset, const SplitIndices& split,
                  const LogFn& log = {});

struct AblationCellResult {
    std::string name;
    Variant variant = Variant::Scmhsa;
    double lambda = 0.0;
    std::vector<uint64_t> seeds;
    std::vector<double> test_mse;
    std::vector<double> test_psnr;
    std::vector<RunHistory> histories;
    double mean_mse = 0.0, sd_mse = 0.0;
    double mean_psnr = 0.0, sd_psnr = 0.0;
};

struct AblationReport {
    std::vector<AblationCellResult> cells;  // {scmhsa, baseline} x {lambda, 0}
};

AblationReport run_ablation(const RunSpec& base, const WindowedDataset& dataset,
                            std::span<const uint64_t> seeds, const LogFn& log = {});

std::string ablation_summary_csv(const AblationReport& report, uint64_t runspec_hash);
std::string ablation_runs_csv(const AblationReport& report, uint64_t runspec_hash);
std::string ablation_curves_csv(const AblationReport& report, uint64_t runspec_hash);

// Worker cap from SCVFP_THREADS (default 1; results are bit-deterministic
// for any fixed worker count).
size_t worker_count();

}  // namespace scvfp
