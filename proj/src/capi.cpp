#include "scvfp.h"

#include <algorithm>
#include <cstring>
#include <span>
#include <string>

#include "pipeline.hpp"
#include "textio.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

int status_of(const std::exception& e) {
    using namespace scvfp;
    if (dynamic_cast<const ShapeError*>(&e)) return SCVFP_ERR_SHAPE;
    if (dynamic_cast<const NumericError*>(&e)) return SCVFP_ERR_NUMERIC;
    if (dynamic_cast<const IoError*>(&e)) return SCVFP_ERR_IO;
    if (dynamic_cast<const FormatError*>(&e)) return SCVFP_ERR_FORMAT;
    if (dynamic_cast<const ConfigError*>(&e)) return SCVFP_ERR_CONFIG;
    return SCVFP_ERR_UNKNOWN;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        set_error(e.what());
        return status_of(e);
    } catch (...) {
        set_error("unknown error");
        return SCVFP_ERR_UNKNOWN;
    }
}

int require(const void* ptr, const char* what) {
    if (ptr) return SCVFP_OK;
    set_error(std::string(what) + " must not be NULL");
    return SCVFP_ERR_CONFIG;
}

void copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (!buf || cap == 0) return;
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
}

scvfp::RunSpec parse_spec(const char* config_json) {
    return scvfp::RunSpec::from_json_text(config_json);
}

scvfp::LogFn wrap_log(scvfp_log_fn log, void* user) {
    if (!log) return {};
    return [log, user](const std::string& line) { log(line.c_str(), user); };
}

}  // namespace

struct scvfp_dataset {
    scvfp::EmbeddingSequences data;
};

struct scvfp_model {
    scvfp::Checkpoint checkpoint;
    scvfp::ModelState state;
};

extern "C" {

const char* scvfp_status_name(int status) {
    switch (status) {
        case SCVFP_OK: return "ok";
        case SCVFP_ERR_IO: return "io error";
        case SCVFP_ERR_FORMAT: return "format error";
        case SCVFP_ERR_CONFIG: return "config error";
        case SCVFP_ERR_SHAPE: return "shape error";
        case SCVFP_ERR_NUMERIC: return "numeric error";
        case SCVFP_ERR_VERIFY: return "verification failed";
        default: return "unknown error";
    }
}

const char* scvfp_last_error(void) { return g_last_error.c_str(); }

const char* scvfp_version(void) { return "scvfp 1.0.0"; }

int scvfp_gen_data(const scvfp_synth_params* params, const char* out_path, char* hash_hex,
                   size_t hash_cap) {
    if (int rc = require(params, "params"); rc != SCVFP_OK) return rc;
    if (int rc = require(out_path, "out_path"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        scvfp::SyntheticConfig cfg;
        cfg.d = params->d;
        cfg.num_sequences = params->sequences;
        cfg.length = params->length;
        cfg.sigma = params->sigma;
        cfg.seed = params->seed;
        cfg.angles = scvfp::derive_plane_angles(params->d, params->theta_max, params->seed);
        const scvfp::EmbeddingSequences data = scvfp::generate_synthetic(cfg);
        scvfp::write_eseq(out_path, data);
        const uint64_t hash = scvfp::fnv1a64(scvfp::eseq_bytes(data));
        copy_out(scvfp::hash_hex(hash), hash_hex, hash_cap, nullptr);
        return SCVFP_OK;
    });
}

int scvfp_import_csv(const char* csv_path, const char* out_path, char* hash_hex,
                     size_t hash_cap) {
    if (int rc = require(csv_path, "csv_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(out_path, "out_path"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        const scvfp::EmbeddingSequences data = scvfp::read_embedding_csv(csv_path);
        scvfp::write_eseq(out_path, data);
        const uint64_t hash = scvfp::fnv1a64(scvfp::eseq_bytes(data));
        copy_out(scvfp::hash_hex(hash), hash_hex, hash_cap, nullptr);
        return SCVFP_OK;
    });
}

int scvfp_dataset_open(const char* path, scvfp_dataset** out) {
    if (int rc = require(path, "path"); rc != SCVFP_OK) return rc;
    if (int rc = require(out, "out"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        auto* handle = new scvfp_dataset{scvfp::read_eseq(path)};
        *out = handle;
        return SCVFP_OK;
    });
}

void scvfp_dataset_close(scvfp_dataset* dataset) { delete dataset; }

uint32_t scvfp_dataset_dim(const scvfp_dataset* dataset) { return dataset ? dataset->data.d : 0; }

uint32_t scvfp_dataset_sequences(const scvfp_dataset* dataset) {
    return dataset ? static_cast<uint32_t>(dataset->data.sequences.size()) : 0;
}

uint64_t scvfp_dataset_window_count(const scvfp_dataset* dataset, uint32_t m, uint32_t stride) {
    if (!dataset || m == 0 || stride == 0) return 0;
    uint64_t count = 0;
    const uint64_t span = static_cast<uint64_t>(m) * stride;
    for (size_t s = 0; s < dataset->data.sequences.size(); ++s) {
        const uint64_t t = dataset->data.sequence_length(s);
        if (t > span) count += t - span;
    }
    return count;
}

int scvfp_model_open(const char* checkpoint_path, scvfp_model** out) {
    if (int rc = require(checkpoint_path, "checkpoint_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(out, "out"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        scvfp::Checkpoint ckpt = scvfp::read_checkpoint(checkpoint_path);
        scvfp::ModelState state = scvfp::restore_model(ckpt);
        *out = new scvfp_model{std::move(ckpt), std::move(state)};
        return SCVFP_OK;
    });
}

void scvfp_model_close(scvfp_model* model) { delete model; }

uint64_t scvfp_model_param_total(const scvfp_model* model) {
    return model ? model->state.parameter_total() : 0;
}

int scvfp_model_config(const scvfp_model* model, char* buf, size_t cap, size_t* needed) {
    if (int rc = require(model, "model"); rc != SCVFP_OK) return rc;
    copy_out(model->checkpoint.config_json, buf, cap, needed);
    return SCVFP_OK;
}

int scvfp_train(const char* config_json, const char* data_path, const char* out_dir,
                scvfp_log_fn log, void* user) {
    if (int rc = require(config_json, "config_json"); rc != SCVFP_OK) return rc;
    if (int rc = require(data_path, "data_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(out_dir, "out_dir"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        scvfp::run_training(parse_spec(config_json), data_path, out_dir, wrap_log(log, user));
        return SCVFP_OK;
    });
}

int scvfp_evaluate(const char* checkpoint_path, const char* data_path, const char* split,
                   const char* report_dir, uint32_t rollout_steps, scvfp_metrics* out) {
    if (int rc = require(checkpoint_path, "checkpoint_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(data_path, "data_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(split, "split"); rc != SCVFP_OK) return rc;
    if (rollout_steps > SCVFP_MAX_ROLLOUT_STEPS) {
        set_error("rollout_steps exceeds SCVFP_MAX_ROLLOUT_STEPS");
        return SCVFP_ERR_CONFIG;
    }
    return guarded([&] {
        const scvfp::MetricReport report = scvfp::run_evaluation(
            checkpoint_path, data_path, split, report_dir ? report_dir : "", rollout_steps);
        if (out) {
            *out = {};
            out->mse = report.mse;
            out->psnr = report.psnr;
            out->mean_cosine = report.mean_cosine;
            out->persistence_mse = report.persistence_mse;
            out->windows = report.windows;
            out->rollout_steps = static_cast<uint32_t>(report.cosine_by_step.size());
            for (size_t i = 0; i < report.cosine_by_step.size(); ++i)
                out->cosine_by_step[i] = report.cosine_by_step[i];
        }
        return SCVFP_OK;
    });
}

int scvfp_rollout(const char* checkpoint_path, const char* data_path, uint32_t steps,
                  const char* out_csv) {
    if (int rc = require(checkpoint_path, "checkpoint_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(data_path, "data_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(out_csv, "out_csv"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        scvfp::run_rollout(checkpoint_path, data_path, steps, out_csv);
        return SCVFP_OK;
    });
}

int scvfp_ablate(const char* config_json, const char* data_path, const char* out_dir,
                 const uint64_t* seeds, size_t n_seeds, scvfp_log_fn log, void* user) {
    if (int rc = require(config_json, "config_json"); rc != SCVFP_OK) return rc;
    if (int rc = require(data_path, "data_path"); rc != SCVFP_OK) return rc;
    if (int rc = require(out_dir, "out_dir"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        static const uint64_t default_seeds[3] = {2023, 2024, 2025};
        std::span<const uint64_t> seed_span =
            (seeds && n_seeds) ? std::span<const uint64_t>(seeds, n_seeds)
                               : std::span<const uint64_t>(default_seeds, 3);
        scvfp::run_ablation_grid(parse_spec(config_json), data_path, out_dir, seed_span,
                                 wrap_log(log, user));
        return SCVFP_OK;
    });
}

int scvfp_grad_check(const char* config_json, double tolerance, int sabotage_backward,
                     double* max_rel_error, char* report, size_t report_cap) {
    return guarded([&] {
        std::string text;
        double worst = 0.0;
        if (config_json) {
            const scvfp::RunSpec spec = parse_spec(config_json);
            const scvfp::ModelGradCheck check = scvfp::model_grad_check(
                spec.model, tolerance, sabotage_backward != 0, spec.train.seed);
            worst = check.report.max_rel_error;
            text = check.text;
        } else {
            for (scvfp::Variant variant :
                 {scvfp::Variant::Scmhsa, scvfp::Variant::MhsaBaseline}) {
                const scvfp::ModelGradCheck check = scvfp::model_grad_check(
                    scvfp::gradcheck_config(variant), tolerance, sabotage_backward != 0);
                worst = std::max(worst, check.report.max_rel_error);
                text += check.text;
            }
        }
        if (max_rel_error) *max_rel_error = worst;
        copy_out(text, report, report_cap, nullptr);
        if (worst >= tolerance) {
            set_error("gradient check failed: max relative error " +
                      scvfp::format_double(worst) + " >= tolerance " +
                      scvfp::format_double(tolerance));
            return static_cast<int>(SCVFP_ERR_VERIFY);
        }
        return static_cast<int>(SCVFP_OK);
    });
}

int scvfp_param_counts(const char* config_json, scvfp_param_report* out) {
    if (int rc = require(out, "out"); rc != SCVFP_OK) return rc;
    return guarded([&] {
        scvfp::ModelConfig cfg;  // reference scale by default
        if (config_json) cfg = parse_spec(config_json).model;
        scvfp::ModelConfig sc = cfg;
        sc.variant = scvfp::Variant::Scmhsa;
        scvfp::ModelConfig base = cfg;
        base.variant = scvfp::Variant::MhsaBaseline;

        out->scmhsa_total = scvfp::param_count(sc).total;
        out->baseline_total = scvfp::param_count(base).total;
        out->scmhsa_attn_per_block =
            scvfp::scmhsa_param_count(cfg.d, cfg.n_heads, cfg.resolved_d_head());
        out->baseline_attn_per_block = scvfp::mhsa_param_count(cfg.d, cfg.n_heads);
        out->total_ratio = static_cast<double>(out->scmhsa_total) /
                           static_cast<double>(out->baseline_total);
        out->attn_ratio = static_cast<double>(out->scmhsa_attn_per_block) /
                          static_cast<double>(out->baseline_attn_per_block);
        return SCVFP_OK;
    });
}

int scvfp_param_table(const char* config_json, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        scvfp::ModelConfig cfg;
        if (config_json) cfg = parse_spec(config_json).model;
        std::string text;
        for (scvfp::Variant variant : {scvfp::Variant::Scmhsa, scvfp::Variant::MhsaBaseline}) {
            scvfp::ModelConfig v = cfg;
            v.variant = variant;
            const scvfp::ParamCountTable table = scvfp::param_count(v);
            text += "variant " + scvfp::variant_name(variant) + "\n";
            for (const auto& row : table.rows)
                text += "  " + row.component + ": " + std::to_string(row.count) + "\n";
            text += "  total: " + std::to_string(table.total) + "\n";
        }
        scvfp_param_report report{};
        scvfp_param_counts(config_json, &report);
        text += "attention ratio (scmhsa/baseline per block): " +
                scvfp::format_double(report.attn_ratio) + "\n";
        text += "total ratio (scmhsa/baseline): " + scvfp::format_double(report.total_ratio) +
                "\n";
        copy_out(text, buf, cap, needed);
        return SCVFP_OK;
    });
}

int scvfp_verify_psnr_table(const char* csv_path, double max_dev_db, double* max_dev_out,
                            uint32_t* rows_out) {
    return guarded([&] {
        scvfp::PsnrTableCheck check;
        if (csv_path) {
            const std::vector<scvfp::MsePsnrRow> rows = scvfp::load_psnr_csv(csv_path);
            check = scvfp::verify_psnr_rows(rows);
        } else {
            check = scvfp::verify_psnr_rows(scvfp::builtin_psnr_fixture());
        }
        if (max_dev_out) *max_dev_out = check.max_abs_deviation_db;
        if (rows_out) *rows_out = static_cast<uint32_t>(check.rows);
        if (check.max_abs_deviation_db > max_dev_db) {
            set_error("psnr relation check failed: max deviation " +
                      scvfp::format_double(check.max_abs_deviation_db) + " dB > threshold " +
                      scvfp::format_double(max_dev_db) + " dB (row " +
                      std::to_string(check.worst_row) + ")");
            return static_cast<int>(SCVFP_ERR_VERIFY);
        }
        return static_cast<int>(SCVFP_OK);
    });
}

}  // extern "C"
