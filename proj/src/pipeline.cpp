#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "textio.hpp"

namespace scvfp {

WindowedDataset load_windows(const std::string& data_path, const RunSpec& spec) {
    EmbeddingSequences sequences = read_eseq(data_path);
    if (sequences.d != spec.model.d)
        throw ConfigError("data width " + std::to_string(sequences.d) +
                          " does not match configured d " + std::to_string(spec.model.d));
    return WindowedDataset(std::move(sequences), spec.model.m, spec.data.stride,
                           spec.data.disjoint_windows);
}

std::span<const size_t> pick_split(const SplitIndices& split, const std::string& name) {
    if (name == "train") return split.train;
    if (name == "val") return split.val;
    if (name == "test") return split.test;
    throw ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

TrainOutput run_training(const RunSpec& spec_in, const std::string& data_path,
                         const std::string& out_dir, const LogFn& log) {
    RunSpec spec = spec_in;
    spec.data.path = data_path;
    spec.validate();
    std::filesystem::create_directories(out_dir);

    WindowedDataset dataset = load_windows(data_path, spec);
    const SplitIndices split = derive_split(spec, dataset);

    TrainOutput out;
    out.result = train(spec, dataset, split, log);
    out.final_checkpoint_path = out_dir + "/checkpoint_final.scvf";
    out.best_checkpoint_path = out_dir + "/checkpoint_best.scvf";
    out.history_path = out_dir + "/history.csv";
    out.runspec_path = out_dir + "/runspec.json";
    write_checkpoint(out.final_checkpoint_path, out.result.final_checkpoint);
    write_checkpoint(out.best_checkpoint_path, out.result.best_checkpoint);
    write_text_file(out.history_path, history_csv(out.result.history, spec.hash()));
    write_text_file(out.runspec_path, spec.canonical_json() + "\n");
    return out;
}

namespace {

std::string metrics_csv(const MetricReport& report, uint64_t runspec_hash,
                        const std::string& split_name) {
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(runspec_hash));
    csv.header({"split", "windows", "mse", "psnr", "mean_cosine", "persistence_mse"});
    csv.row({split_name, std::to_string(report.windows), format_double(report.mse),
             format_double(report.psnr), format_double(report.mean_cosine),
             format_double(report.persistence_mse)});
    return csv.str();
}

std::string cosine_steps_csv(const MetricReport& report, uint64_t runspec_hash) {
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(runspec_hash));
    csv.header({"step", "mean_cosine"});
    for (size_t i = 0; i < report.cosine_by_step.size(); ++i)
        csv.row({std::to_string(i + 1), format_double(report.cosine_by_step[i])});
    return csv.str();
}

size_t default_grid_cols(size_t d) {
    size_t c = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    return std::max<size_t>(c, 1);
}

}  // namespace

MetricReport run_evaluation(const std::string& checkpoint_path, const std::string& data_path,
                            const std::string& split_name, const std::string& report_dir,
                            size_t rollout_steps) {
    const Checkpoint ckpt = read_checkpoint(checkpoint_path);
    RunSpec spec = RunSpec::from_json_text(ckpt.config_json);
    spec.data.path = data_path;
    const ModelState model = restore_model(ckpt);

    WindowedDataset dataset = load_windows(data_path, spec);
    const SplitIndices split = derive_split(spec, dataset);
    const std::span<const size_t> indices = pick_split(split, split_name);
    const MetricReport report = evaluate(model, dataset, indices, rollout_steps);

    if (!report_dir.empty()) {
        std::filesystem::create_directories(report_dir);
        const uint64_t hash = spec.hash();
        write_text_file(report_dir + "/report.csv", metrics_csv(report, hash, split_name));
        write_text_file(report_dir + "/cosine_by_step.csv", cosine_steps_csv(report, hash));
        NoGradGuard no_grad;
        const size_t n_maps = std::min<size_t>(indices.size(), 8);
        const size_t grid_cols = default_grid_cols(dataset.d());
        for (size_t i = 0; i < n_maps; ++i) {
            const size_t idx = indices[i];
            Tensor pred = predict_next(dataset.inputs(idx), model).prediction;
            Tensor label = dataset.label(idx);
            const ErrorMap map = error_map(label.values(), pred.values(), grid_cols);
            char name[32];
            std::snprintf(name, sizeof(name), "/errmap_%03zu.pgm", i);
            write_pgm(report_dir + name, map.rows, map.cols, map.normalized);
        }
    }
    return report;
}

void run_rollout(const std::string& checkpoint_path, const std::string& data_path, size_t steps,
                 const std::string& out_csv) {
    if (steps < 1) throw ConfigError("rollout: steps must be >= 1");
    const Checkpoint ckpt = read_checkpoint(checkpoint_path);
    RunSpec spec = RunSpec::from_json_text(ckpt.config_json);
    spec.data.path = data_path;
    const ModelState model = restore_model(ckpt);

    WindowedDataset dataset = load_windows(data_path, spec);
    const SplitIndices split = derive_split(spec, dataset);
    const size_t idx = split.test.empty() ? 0 : split.test.front();
    if (dataset.size() == 0) throw ConfigError("rollout: dataset has no windows");

    Tensor preds = rollout(dataset.inputs(idx), steps, model);
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(spec.hash()));
    csv.comment("window sequence=" + std::to_string(dataset.window(idx).sequence) +
                " start=" + std::to_string(dataset.window(idx).start));
    std::vector<std::string> header;
    for (size_t j = 0; j < dataset.d(); ++j) header.push_back("e" + std::to_string(j));
    csv.header(std::move(header));
    for (size_t s = 0; s < steps; ++s) {
        std::vector<std::string> row;
        for (size_t j = 0; j < dataset.d(); ++j)
            row.push_back(format_double(preds.at(s, j)));
        csv.row(std::move(row));
    }
    csv.save(out_csv);
}

AblationReport run_ablation_grid(const RunSpec& spec_in, const std::string& data_path,
                                 const std::string& out_dir, std::span<const uint64_t> seeds,
                                 const LogFn& log) {
    RunSpec spec = spec_in;
    spec.data.path = data_path;
    spec.validate();
    std::filesystem::create_directories(out_dir);

    WindowedDataset dataset = load_windows(data_path, spec);
    const AblationReport report = run_ablation(spec, dataset, seeds, log);
    const uint64_t hash = spec.hash();
    write_text_file(out_dir + "/ablation_summary.csv", ablation_summary_csv(report, hash));
    write_text_file(out_dir + "/ablation_runs.csv", ablation_runs_csv(report, hash));
    write_text_file(out_dir + "/ablation_curves.csv", ablation_curves_csv(report, hash));
    return report;
}

ModelConfig gradcheck_config(Variant variant) {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.m = 3;
    cfg.n_heads = 2;
    cfg.d_head = 4;
    cfg.blocks = 1;
    cfg.ffn_width = 32;
    cfg.head_hidden = 8;
    cfg.variant = variant;
    cfg.lambda = 0.1;
    return cfg;
}

ModelGradCheck model_grad_check(const ModelConfig& config, double tolerance,
                                bool sabotage_backward, uint64_t seed) {
    config.validate();
    Xoshiro256pp rng(seed);
    ModelState model = init_model(config, rng);

    std::vector<double> window_values(config.m * config.d);
    for (double& v : window_values) v = rng.next_gaussian();
    std::vector<double> label_values(config.d);
    for (double& v : label_values) v = rng.next_gaussian();
    const Tensor window = Tensor::from({config.m, config.d}, std::move(window_values));
    const Tensor label = Tensor::from({1, config.d}, std::move(label_values));

    double min_abs_cos = 1.0;
    auto loss_fn = [&]() {
        PredictResult pred = predict_next(window, model);
        return total_loss(label, pred.prediction, pred.block_heads, config.lambda, &min_abs_cos)
            .total;
    };

    GradCheckOptions options;
    options.sabotage_backward = sabotage_backward;
    options.near_kink = [&min_abs_cos] { return min_abs_cos < 1e-3; };

    ModelGradCheck out;
    out.report = grad_check(loss_fn, model.named_tensors(), options);

    std::ostringstream text;
    text << "variant " << variant_name(config.variant) << ": checked " << out.report.checked
         << " elements, skipped " << out.report.skipped << "\n";
    for (const TensorGradError& t : out.report.per_tensor) {
        text << "  " << t.name << " max_rel " << format_double(t.max_rel_error) << " (checked "
             << t.checked << ", skipped " << t.skipped << ")\n";
    }
    text << "worst: " << out.report.worst_tensor << "[" << out.report.worst_element
         << "] autodiff " << format_double(out.report.worst_autodiff) << " numeric "
         << format_double(out.report.worst_numeric) << "\n";
    text << "max_rel_error " << format_double(out.report.max_rel_error) << " tolerance "
         << format_double(tolerance)
         << (out.report.max_rel_error < tolerance ? " -> PASS" : " -> FAIL") << "\n";
    out.text = text.str();
    return out;
}

std::vector<MsePsnrRow> load_psnr_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::vector<MsePsnrRow> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::stringstream cells(line);
        std::string a, b, extra;
        if (!std::getline(cells, a, ',') || !std::getline(cells, b, ','))
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": expected 'mse,psnr'");
        if (std::getline(cells, extra, ','))
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": expected exactly two columns");
        try {
            rows.push_back({std::stod(a), std::stod(b)});
        } catch (const std::exception&) {
            if (line_no == 1) continue;  // header row
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": not numeric: '" + line + "'");
        }
    }
    if (rows.empty()) throw FormatError(path + ": no (mse,psnr) rows found");
    return rows;
}

}  // namespace scvfp
