#include "trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "objective.hpp"
#include "textio.hpp"

namespace scvfp {

void adamw_apply(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, uint64_t t, const TrainConfig& cfg) {
    if (theta.size() != grad.size() || theta.size() != m.size() || theta.size() != v.size())
        throw ShapeError("adamw_apply: parameter/gradient size mismatch");
    if (t < 1) throw ConfigError("adamw_apply: step index starts at 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < theta.size(); ++i) {
        double p = theta[i];
        p -= cfg.lr * cfg.weight_decay * p;  // decoupled decay
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        theta[i] = static_cast<double>(static_cast<float>(p));
    }
}

AdamW::AdamW(std::vector<Tensor> params, TrainConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)) {
    cfg_.validate();
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void AdamW::step() {
    ++t_;
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (p.grad().empty()) throw ShapeError("adamw: parameter has no gradient buffer");
        adamw_apply(p.mutable_values(), p.grad(), m_[i], v_[i], t_, cfg_);
    }
}

size_t worker_count() {
    const char* env = std::getenv("SCVFP_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || parsed < 1) return 1;
    return static_cast<size_t>(parsed);
}

namespace {

// Flat view over the canonical parameter list.
struct ParamSet {
    std::vector<Tensor> tensors;
    std::vector<size_t> offsets;
    size_t total = 0;

    explicit ParamSet(const ModelState& state) {
        for (auto& [name, t] : state.named_tensors()) {
            offsets.push_back(total);
            total += t.numel();
            tensors.push_back(t);
        }
    }

    void extract_grads(std::vector<double>& flat) const {
        flat.resize(total);
        for (size_t i = 0; i < tensors.size(); ++i) {
            const auto g = tensors[i].grad();
            double* dst = flat.data() + offsets[i];
            if (g.empty())
                std::fill(dst, dst + tensors[i].numel(), 0.0);
            else
                std::copy(g.begin(), g.end(), dst);
        }
    }
};

struct ItemLoss {
    double mse = 0.0;
    double ss = 0.0;
    double total = 0.0;
};

// Forward + loss for one window; gradients land on the given state.
ItemLoss train_item(const ModelState& model, const WindowedDataset& dataset, size_t index,
                    double lambda) {
    PredictResult pred = predict_next(dataset.inputs(index), model);
    Tensor label = dataset.label(index);
    LossBreakdown loss;
    loss.lambda = lambda;
    loss.mse_term = embedding_mse(label, pred.prediction);
    if (lambda == 0.0) {
        // value-only similarity term: reported but not optimized
        NoGradGuard no_grad;
        loss.ss_term = semantic_similarity_loss(pred.block_heads);
        loss.total = loss.mse_term;
    } else {
        loss.ss_term = semantic_similarity_loss(pred.block_heads);
        loss.total = add(loss.mse_term, scalar_mul(loss.ss_term, lambda));
    }
    backward(loss.total);
    return {loss.mse_term.item(), loss.ss_term.item(), loss.total.item()};
}

double evaluate_val_mse(const ModelState& model, const WindowedDataset& dataset,
                        std::span<const size_t> indices) {
    NoGradGuard no_grad;
    double sum = 0.0;
    for (size_t idx : indices) {
        Tensor pred = predict_next(dataset.inputs(idx), model).prediction;
        sum += embedding_mse(dataset.label(idx), pred).item();
    }
    // same accumulation and scaling as evaluate(), so the history value and a
    // later eval of the checkpoint agree bit-for-bit
    return sum * (1.0 / static_cast<double>(indices.size()));
}

struct SubSeeds {
    uint64_t init;
    uint64_t split;
    uint64_t shuffle;
};

SubSeeds derive_sub_seeds(uint64_t seed) {
    uint64_t chain = seed;
    SubSeeds s{};
    s.init = splitmix64_next(chain);
    s.split = splitmix64_next(chain);
    s.shuffle = splitmix64_next(chain);
    return s;
}

}  // namespace

SplitIndices derive_split(const RunSpec& spec, const WindowedDataset& dataset) {
    const uint64_t split_seed = derive_sub_seeds(spec.train.seed).split;
    if (spec.data.split_by_sequence)
        return split_by_sequence(dataset, spec.data.split_ratios, split_seed);
    return split_instances(dataset.size(), spec.data.split_ratios, split_seed);
}

TrainResult train(const RunSpec& spec, const WindowedDataset& dataset, const SplitIndices& split,
                  const LogFn& log) {
    spec.validate();
    if (split.train.empty()) throw ConfigError("train: empty train split");
    if (dataset.d() != spec.model.d)
        throw ConfigError("train: dataset width " + std::to_string(dataset.d()) +
                          " != configured d " + std::to_string(spec.model.d));

    const SubSeeds seeds = derive_sub_seeds(spec.train.seed);
    Xoshiro256pp init_rng(seeds.init);
    Xoshiro256pp shuffle_rng(seeds.shuffle);

    ModelState model = init_model(spec.model, init_rng);
    ParamSet params(model);
    AdamW optimizer(params.tensors, spec.train);
    const std::string config_json = spec.canonical_json();
    const double lambda = spec.model.lambda;
    const size_t workers = worker_count();

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    bool have_best = false;

    std::vector<size_t> order = split.train;
    for (size_t epoch = 1; epoch <= spec.train.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        double mse_sum = 0.0, ss_sum = 0.0, total_sum = 0.0;
        for (size_t batch_start = 0, batch_no = 0; batch_start < order.size();
             batch_start += spec.train.batch, ++batch_no) {
            const size_t batch_size =
                std::min(spec.train.batch, order.size() - batch_start);
            const std::span<const size_t> batch(order.data() + batch_start, batch_size);
            model.zero_grads();

            try {
                if (workers <= 1 || batch_size == 1) {
                    for (size_t k = 0; k < batch_size; ++k) {
                        const ItemLoss item = train_item(model, dataset, batch[k], lambda);
                        mse_sum += item.mse;
                        ss_sum += item.ss;
                        total_sum += item.total;
                    }
                } else {
                    // Per-item gradients computed on worker-local parameter
                    // clones, reduced in item order: bit-identical for any
                    // fixed worker count.
                    const size_t w = std::min(workers, batch_size);
                    std::vector<std::vector<double>> item_grads(batch_size);
                    std::vector<ItemLoss> item_losses(batch_size);
                    std::vector<std::exception_ptr> failures(w);
                    std::vector<std::thread> pool;
                    pool.reserve(w);
                    for (size_t wi = 0; wi < w; ++wi) {
                        pool.emplace_back([&, wi] {
                            try {
                                ModelState local = clone_model(model);
                                ParamSet local_params(local);
                                for (size_t k = wi; k < batch_size; k += w) {
                                    item_losses[k] =
                                        train_item(local, dataset, batch[k], lambda);
                                    local_params.extract_grads(item_grads[k]);
                                    local.zero_grads();
                                }
                            } catch (...) {
                                failures[wi] = std::current_exception();
                            }
                        });
                    }
                    for (auto& t : pool) t.join();
                    for (const auto& failure : failures)
                        if (failure) std::rethrow_exception(failure);

                    std::vector<double> reduced(params.total, 0.0);
                    for (size_t k = 0; k < batch_size; ++k) {
                        const std::vector<double>& g = item_grads[k];
                        for (size_t i = 0; i < params.total; ++i) reduced[i] += g[i];
                        mse_sum += item_losses[k].mse;
                        ss_sum += item_losses[k].ss;
                        total_sum += item_losses[k].total;
                    }
                    for (size_t i = 0; i < params.tensors.size(); ++i) {
                        auto& buf = params.tensors[i].node()->grad;
                        if (buf.empty()) buf.assign(params.tensors[i].numel(), 0.0);
                        std::copy(reduced.begin() + params.offsets[i],
                                  reduced.begin() + params.offsets[i] +
                                      params.tensors[i].numel(),
                                  buf.begin());
                    }
                }
            } catch (const NumericError& e) {
                throw NumericError("train: epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_no) + ": " + e.what() +
                                   " (running means: mse " +
                                   format_double(mse_sum / std::max<size_t>(batch_start, 1)) +
                                   ", ss " +
                                   format_double(ss_sum / std::max<size_t>(batch_start, 1)) + ")");
            }

            // batch loss is the mean over items
            const double inv_b = 1.0 / static_cast<double>(batch_size);
            for (Tensor& p : params.tensors) {
                auto& g = p.node()->grad;
                if (g.empty()) g.assign(p.numel(), 0.0);
                for (double& v : g) v *= inv_b;
            }
            if (spec.train.grad_clip > 0.0) {
                double norm_sq = 0.0;
                for (const Tensor& p : params.tensors)
                    for (double v : p.grad()) norm_sq += v * v;
                const double norm = std::sqrt(norm_sq);
                if (norm > spec.train.grad_clip) {
                    const double scale = spec.train.grad_clip / norm;
                    for (Tensor& p : params.tensors)
                        for (double& v : p.node()->grad) v *= scale;
                }
            }
            optimizer.step();
        }

        EpochStats stats;
        stats.epoch = epoch;
        const double inv_n = 1.0 / static_cast<double>(order.size());
        stats.train_mse = mse_sum * inv_n;
        stats.train_ss = ss_sum * inv_n;
        stats.train_total = total_sum * inv_n;
        if (!split.val.empty()) {
            stats.val_mse = evaluate_val_mse(model, dataset, split.val);
            stats.val_psnr = stats.val_mse > 0.0 ? metric_psnr(stats.val_mse)
                                                 : std::numeric_limits<double>::infinity();
        } else {
            stats.val_mse = std::numeric_limits<double>::quiet_NaN();
            stats.val_psnr = std::numeric_limits<double>::quiet_NaN();
        }
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(stats);

        if (!split.val.empty() && stats.val_mse < best_val) {
            best_val = stats.val_mse;
            result.best_checkpoint = snapshot_model(model, config_json,
                                                    static_cast<uint32_t>(epoch),
                                                    shuffle_rng.state());
            have_best = true;
        }
        if (log) {
            log("epoch " + std::to_string(epoch) + "/" + std::to_string(spec.train.epochs) +
                " train_total " + format_double(stats.train_total) + " val_mse " +
                format_double(stats.val_mse) + " (" + format_double(stats.seconds) + "s)");
        }
    }

    result.final_checkpoint = snapshot_model(
        model, config_json, static_cast<uint32_t>(spec.train.epochs), shuffle_rng.state());
    if (!have_best) result.best_checkpoint = result.final_checkpoint;
    return result;
}

MetricReport make_metric_report(double mse, double mean_cosine, double persistence_mse,
                                std::vector<double> cosine_by_step, size_t windows) {
    MetricReport report;
    report.mse = mse;
    report.psnr = mse > 0.0 ? metric_psnr(mse) : std::numeric_limits<double>::infinity();
    report.mean_cosine = mean_cosine;
    report.persistence_mse = persistence_mse;
    report.cosine_by_step = std::move(cosine_by_step);
    report.windows = windows;
    return report;
}

MetricReport evaluate(const ModelState& model, const WindowedDataset& dataset,
                      std::span<const size_t> indices, size_t rollout_steps) {
    if (indices.empty()) throw ConfigError("evaluate: empty split");
    if (dataset.d() != model.config.d)
        throw ConfigError("evaluate: dataset width does not match checkpoint d");
    NoGradGuard no_grad;
    const size_t m = dataset.m();
    const size_t d = dataset.d();
    double mse_sum = 0.0, cos_sum = 0.0, persist_sum = 0.0;
    std::vector<double> step_cos(rollout_steps, 0.0);
    std::vector<size_t> step_n(rollout_steps, 0);

    for (size_t idx : indices) {
        Tensor inputs = dataset.inputs(idx);
        Tensor label = dataset.label(idx);
        Tensor pred = predict_next(inputs, model).prediction;
        mse_sum += embedding_mse(label, pred).item();
        cos_sum += cosine_similarity(label.values(), pred.values());

        const auto in = inputs.values();
        const auto lv = label.values();
        double persist = 0.0;
        for (size_t j = 0; j < d; ++j) {
            const double diff = lv[j] - in[(m - 1) * d + j];
            persist += diff * diff;
        }
        persist_sum += persist;

        if (rollout_steps > 0) {
            const WindowInstance& w = dataset.window(idx);
            const size_t t = dataset.store().sequence_length(w.sequence);
            size_t feasible = 0;  // steps with ground truth in the sequence
            while (feasible < rollout_steps &&
                   w.start + (m + feasible) * w.stride <= t - 1)
                ++feasible;
            if (feasible == 0) continue;
            Tensor steps = rollout(inputs, feasible, model);
            const std::vector<float>& seq = dataset.store().sequences[w.sequence];
            for (size_t s = 0; s < feasible; ++s) {
                const float* truth = seq.data() + (w.start + (m + s) * w.stride) * d;
                std::vector<double> truth_d(truth, truth + d);
                std::vector<double> pred_row(steps.values().begin() + s * d,
                                             steps.values().begin() + (s + 1) * d);
                step_cos[s] += cosine_similarity(truth_d, pred_row);
                ++step_n[s];
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(indices.size());
    std::vector<double> cosine_by_step;
    for (size_t s = 0; s < rollout_steps; ++s)
        cosine_by_step.push_back(step_n[s] ? step_cos[s] / static_cast<double>(step_n[s])
                                           : std::numeric_limits<double>::quiet_NaN());
    return make_metric_report(mse_sum * inv_n, cos_sum * inv_n, persist_sum * inv_n,
                              std::move(cosine_by_step), indices.size());
}

std::string history_csv(const RunHistory& history, uint64_t runspec_hash) {
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(runspec_hash));
    csv.header({"epoch", "train_mse", "train_ss", "train_total", "val_mse", "val_psnr",
                "seconds"});
    for (const EpochStats& e : history.epochs) {
        csv.row({std::to_string(e.epoch), format_double(e.train_mse), format_double(e.train_ss),
                 format_double(e.train_total), format_double(e.val_mse),
                 format_double(e.val_psnr), format_double(e.seconds)});
    }
    return csv.str();
}

AblationReport run_ablation(const RunSpec& base, const WindowedDataset& dataset,
                            std::span<const uint64_t> seeds, const LogFn& log) {
    if (seeds.empty()) throw ConfigError("run_ablation: need at least one seed");
    const double lambda = base.model.lambda;
    const struct {
        const char* name;
        Variant variant;
        double lambda;
    } cells[4] = {
        {"scmhsa+ssl", Variant::Scmhsa, lambda},
        {"scmhsa", Variant::Scmhsa, 0.0},
        {"mhsa_baseline+ssl", Variant::MhsaBaseline, lambda},
        {"mhsa_baseline", Variant::MhsaBaseline, 0.0},
    };

    AblationReport report;
    for (const auto& cell : cells) {
        AblationCellResult result;
        result.name = cell.name;
        result.variant = cell.variant;
        result.lambda = cell.lambda;
        for (uint64_t seed : seeds) {
            RunSpec spec = base;
            spec.model.variant = cell.variant;
            spec.model.lambda = cell.lambda;
            spec.train.seed = seed;
            if (log)
                log("ablation cell " + result.name + " seed " + std::to_string(seed));
            const SplitIndices split = derive_split(spec, dataset);
            TrainResult run = train(spec, dataset, split, log);
            const ModelState model = restore_model(run.final_checkpoint);
            const MetricReport metrics = evaluate(model, dataset, split.test, 0);
            result.seeds.push_back(seed);
            result.test_mse.push_back(metrics.mse);
            result.test_psnr.push_back(metrics.psnr);
            result.histories.push_back(std::move(run.history));
        }
        auto mean_sd = [](const std::vector<double>& xs) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            const double sd =
                xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
            return std::make_pair(mean, sd);
        };
        std::tie(result.mean_mse, result.sd_mse) = mean_sd(result.test_mse);
        std::tie(result.mean_psnr, result.sd_psnr) = mean_sd(result.test_psnr);
        report.cells.push_back(std::move(result));
    }
    return report;
}

std::string ablation_summary_csv(const AblationReport& report, uint64_t runspec_hash) {
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(runspec_hash));
    csv.header({"cell", "variant", "lambda", "runs", "mean_test_mse", "sd_test_mse",
                "mean_test_psnr", "sd_test_psnr"});
    for (const auto& cell : report.cells) {
        csv.row({cell.name, variant_name(cell.variant), format_double(cell.lambda),
                 std::to_string(cell.seeds.size()), format_double(cell.mean_mse),
                 format_double(cell.sd_mse), format_double(cell.mean_psnr),
                 format_double(cell.sd_psnr)});
    }
    return csv.str();
}

std::string ablation_runs_csv(const AblationReport& report, uint64_t runspec_hash) {
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(runspec_hash));
    csv.header({"cell", "seed", "test_mse", "test_psnr"});
    for (const auto& cell : report.cells)
        for (size_t i = 0; i < cell.seeds.size(); ++i)
            csv.row({cell.name, std::to_string(cell.seeds[i]), format_double(cell.test_mse[i]),
                     format_double(cell.test_psnr[i])});
    return csv.str();
}

std::string ablation_curves_csv(const AblationReport& report, uint64_t runspec_hash) {
    CsvWriter csv;
    csv.comment("runspec_hash=" + hash_hex(runspec_hash));
    csv.header({"cell", "seed", "epoch", "train_mse", "train_ss", "train_total", "val_mse",
                "val_psnr"});
    for (const auto& cell : report.cells) {
        for (size_t i = 0; i < cell.seeds.size(); ++i) {
            for (const EpochStats& e : cell.histories[i].epochs) {
                csv.row({cell.name, std::to_string(cell.seeds[i]), std::to_string(e.epoch),
                         format_double(e.train_mse), format_double(e.train_ss),
                         format_double(e.train_total), format_double(e.val_mse),
                         format_double(e.val_psnr)});
            }
        }
    }
    return csv.str();
}

}  // namespace scvfp
