#pragma once

#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "objective.hpp"
#include "trainer.hpp"

namespace scvfp {

// End-to-end command implementations shared by the C API and the tests.

WindowedDataset load_windows(const std::string& data_path, const RunSpec& spec);

std::span<const size_t> pick_split(const SplitIndices& split, const std::string& name);

struct TrainOutput {
    TrainResult result;
    std::string final_checkpoint_path;
    std::string best_checkpoint_path;
    std::string history_path;
    std::string runspec_path;
};

// Train on the ESEQ file and write checkpoint_final.scvf, checkpoint_best.scvf,
// history.csv and runspec.json into out_dir.
TrainOutput run_training(const RunSpec& spec, const std::string& data_path,
                         const std::string& out_dir, const LogFn& log = {});

// Evaluate a checkpoint on one split of a data file. When report_dir is
// non-empty, writes report.csv, cosine_by_step.csv and error-map PGMs for
// the first eight windows of the split.
MetricReport run_evaluation(const std::string& checkpoint_path, const std::string& data_path,
                            const std::string& split_name, const std::string& report_dir,
                            size_t rollout_steps = 5);

// Roll the model forward from the first window of the test split and write
// the steps x d prediction matrix as CSV.
void run_rollout(const std::string& checkpoint_path, const std::string& data_path, size_t steps,
                 const std::string& out_csv);

// Train the {variant} x {lambda, 0} grid for every seed and write
// ablation_summary.csv, ablation_runs.csv and ablation_curves.csv.
AblationReport run_ablation_grid(const RunSpec& spec, const std::string& data_path,
                                 const std::string& out_dir, std::span<const uint64_t> seeds,
                                 const LogFn& log = {});

// The small configuration used by the gradcheck command:
// d=8, M=3, N=2, d_head=4, one block, ffn 32, head hidden 8.
ModelConfig gradcheck_config(Variant variant);

struct ModelGradCheck {
    GradCheckReport report;
    std::string text;  // per-tensor table plus worst-offender summary
};

// Finite-difference check of d(total loss)/d(every parameter) on a seeded
// random window; evaluations near an |cos| kink (< 1e-3) are skipped.
ModelGradCheck model_grad_check(const ModelConfig& config, double tolerance,
                                bool sabotage_backward = false, uint64_t seed = 2023);

// CSV rows of "mse,psnr" (header and comment lines allowed).
std::vector<MsePsnrRow> load_psnr_csv(const std::string& path);

}  // namespace scvfp
