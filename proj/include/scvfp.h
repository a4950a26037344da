/*
 * scvfp - embedding-space video-frame-prediction lab.
 *
 * C interface over the core library: opaque handles, integer status codes,
 * a thread-local error message. All paths are UTF-8. Configs are RunSpec
 * JSON text (see README for the schema); NULL selects documented defaults.
 */
#ifndef SCVFP_H
#define SCVFP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SCVFP_API __declspec(dllexport)
#else
#define SCVFP_API __attribute__((visibility("default")))
#endif

enum scvfp_status {
    SCVFP_OK = 0,
    SCVFP_ERR_IO = 1,      /* missing/unreadable/unwritable file */
    SCVFP_ERR_FORMAT = 2,  /* bad magic, version, truncation, malformed CSV */
    SCVFP_ERR_CONFIG = 3,  /* invalid or unknown configuration */
    SCVFP_ERR_SHAPE = 4,   /* tensor extent mismatch */
    SCVFP_ERR_NUMERIC = 5, /* non-finite value or undefined metric */
    SCVFP_ERR_VERIFY = 6,  /* a verification call exceeded its threshold */
    SCVFP_ERR_UNKNOWN = 7
};

SCVFP_API const char* scvfp_status_name(int status);

/* Message for the most recent failing call on this thread. */
SCVFP_API const char* scvfp_last_error(void);

SCVFP_API const char* scvfp_version(void);

typedef void (*scvfp_log_fn)(const char* line, void* user);

/* ---- synthetic data ------------------------------------------------- */

typedef struct scvfp_synth_params {
    uint32_t d;        /* embedding width, must be even */
    uint32_t sequences;
    uint32_t length;   /* frames per sequence */
    double sigma;      /* observation noise */
    double theta_max;  /* per-plane rotation angle upper bound (radians) */
    uint64_t seed;
} scvfp_synth_params;

/* Writes an ESEQ1 file; hash_hex (>= 17 bytes) receives the 64-bit content
 * hash in hex when non-NULL. */
SCVFP_API int scvfp_gen_data(const scvfp_synth_params* params, const char* out_path,
                             char* hash_hex, size_t hash_cap);

/* One frame per CSV line, blank lines separate sequences. */
SCVFP_API int scvfp_import_csv(const char* csv_path, const char* out_path, char* hash_hex,
                               size_t hash_cap);

/* ---- datasets -------------------------------------------------------- */

typedef struct scvfp_dataset scvfp_dataset;

SCVFP_API int scvfp_dataset_open(const char* path, scvfp_dataset** out);
SCVFP_API void scvfp_dataset_close(scvfp_dataset* dataset);
SCVFP_API uint32_t scvfp_dataset_dim(const scvfp_dataset* dataset);
SCVFP_API uint32_t scvfp_dataset_sequences(const scvfp_dataset* dataset);
SCVFP_API uint64_t scvfp_dataset_window_count(const scvfp_dataset* dataset, uint32_t m,
                                              uint32_t stride);

/* ---- models ----------------------------------------------------------- */

typedef struct scvfp_model scvfp_model;

SCVFP_API int scvfp_model_open(const char* checkpoint_path, scvfp_model** out);
SCVFP_API void scvfp_model_close(scvfp_model* model);
SCVFP_API uint64_t scvfp_model_param_total(const scvfp_model* model);
/* Copies the canonical RunSpec JSON into buf; returns needed size. */
SCVFP_API int scvfp_model_config(const scvfp_model* model, char* buf, size_t cap,
                                 size_t* needed);

/* ---- runs -------------------------------------------------------------- */

/* Trains per the RunSpec JSON on the ESEQ file; out_dir receives
 * checkpoint_final.scvf, checkpoint_best.scvf, history.csv, runspec.json. */
SCVFP_API int scvfp_train(const char* config_json, const char* data_path, const char* out_dir,
                          scvfp_log_fn log, void* user);

#define SCVFP_MAX_ROLLOUT_STEPS 16

typedef struct scvfp_metrics {
    double mse;
    double psnr; /* +inf when mse == 0 */
    double mean_cosine;
    double persistence_mse; /* repeat-the-last-frame floor */
    uint64_t windows;
    uint32_t rollout_steps;
    double cosine_by_step[SCVFP_MAX_ROLLOUT_STEPS];
} scvfp_metrics;

/* split is "train", "val" or "test"; report_dir NULL skips file artifacts
 * (otherwise report.csv, cosine_by_step.csv, errmap_*.pgm are written). */
SCVFP_API int scvfp_evaluate(const char* checkpoint_path, const char* data_path,
                             const char* split, const char* report_dir, uint32_t rollout_steps,
                             scvfp_metrics* out);

/* Autoregressive continuation from the first test window -> steps x d CSV. */
SCVFP_API int scvfp_rollout(const char* checkpoint_path, const char* data_path, uint32_t steps,
                            const char* out_csv);

/* Trains the {scmhsa, mhsa_baseline} x {lambda, 0} grid per seed and writes
 * ablation_summary.csv, ablation_runs.csv, ablation_curves.csv. */
SCVFP_API int scvfp_ablate(const char* config_json, const char* data_path, const char* out_dir,
                           const uint64_t* seeds, size_t n_seeds, scvfp_log_fn log, void* user);

/* ---- verification -------------------------------------------------------- */

/* Finite-difference check over every parameter of the total loss for both
 * attention variants. config_json NULL uses the built-in small config
 * (d=8, M=3, N=2, one block). Returns SCVFP_OK when the max relative error
 * is below tolerance, SCVFP_ERR_VERIFY otherwise. sabotage_backward is a
 * negative-control hook that corrupts one gradient. report (optional)
 * receives a printable per-tensor table. */
SCVFP_API int scvfp_grad_check(const char* config_json, double tolerance,
                               int sabotage_backward, double* max_rel_error, char* report,
                               size_t report_cap);

typedef struct scvfp_param_report {
    uint64_t scmhsa_total;
    uint64_t baseline_total;
    uint64_t scmhsa_attn_per_block;
    uint64_t baseline_attn_per_block;
    double total_ratio;
    double attn_ratio;
} scvfp_param_report;

/* Closed-form parameter accounting for both variants of the configured
 * model. config_json NULL uses the reference scale (d=768, 6 heads,
 * d_head=128, 6 blocks). */
SCVFP_API int scvfp_param_counts(const char* config_json, scvfp_param_report* out);
SCVFP_API int scvfp_param_table(const char* config_json, char* buf, size_t cap, size_t* needed);

/* Checks every (mse, psnr) row against 10*log10(255^2/mse). csv_path NULL
 * uses the bundled reference table. Returns SCVFP_OK when the max absolute
 * deviation is <= max_dev_db, SCVFP_ERR_VERIFY when it exceeds it. */
SCVFP_API int scvfp_verify_psnr_table(const char* csv_path, double max_dev_db,
                                      double* max_dev_out, uint32_t* rows_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SCVFP_H */
