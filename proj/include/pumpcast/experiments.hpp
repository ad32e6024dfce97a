#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumpcast/balance.hpp"
#include "pumpcast/config.hpp"
#include "pumpcast/eval.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/labeling.hpp"
#include "pumpcast/models/model.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/telemetry.hpp"
#include "pumpcast/textio.hpp"

namespace pumpcast {

// Embedded in every run record so artifacts identify the code that wrote them.
inline constexpr const char* kPipelineVersion = "0.1.0";

using PredictorKind = std::variant<ModelKind, BaselineKind>;

inline std::string predictor_name(const PredictorKind& predictor) {
    if (const auto* model = std::get_if<ModelKind>(&predictor)) return model_name(*model);
    return baseline_name(std::get<BaselineKind>(predictor));
}

struct RunSpec {
    std::int64_t window = 60;
    std::int64_t horizon = 5;
    PredictorKind predictor = ModelKind::Forest;

    std::string cell_id() const {
        return "L" + std::to_string(window) + "_h" + std::to_string(horizon);
    }
    std::string id() const { return cell_id() + "_" + predictor_name(predictor); }
};

// Single-factor deviations from the shared config, used by the ablation suite.
struct RunOverrides {
    std::optional<FeatureSpec> features;
    std::optional<bool> smote_enabled;
    std::optional<bool> smote_standardize;
};

struct RunOutcome {
    RunSpec spec;
    std::string variant;  // empty for grid runs, ablation tag otherwise
    bool ok = false;
    std::string error;

    ConfusionMatrix confusion;
    MetricReport metrics;
    std::optional<double> specificity;  // Normal-class recall
    bool test_single_class = false;

    std::vector<std::int64_t> anchors;  // test anchors, aligned with predictions
    std::vector<Prediction> predictions;
    std::vector<BinaryLabel> truths;

    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t synthetic_added = 0;
    bool smote_applied = false;
    std::vector<SmoteAuditEntry> smote_audit;

    std::vector<std::pair<std::string, double>> importance;  // forest runs only
    nlohmann::json model_json;
};

// Seed fan-out: data-path randomness (smote, shuffled split) is keyed by the
// cell so every predictor in a cell trains on identical data; model-path
// randomness is keyed by the full run id. Both derive from the global seed
// alone, so a run record reproduces the run without external state.
inline std::uint64_t cell_seed(const PipelineConfig& config, const RunSpec& spec) {
    return derive_seed(config.seed, hash_name(spec.cell_id()));
}

inline std::uint64_t run_seed(const PipelineConfig& config, const RunSpec& spec) {
    return derive_seed(config.seed, hash_name(spec.id()));
}

inline bool predictor_uses_smote(const PredictorKind& predictor) {
    if (std::holds_alternative<ModelKind>(predictor)) return true;
    // Rule variants ignore training data; the isolation forest calibrates its
    // threshold on the raw class ratio and must never see synthetic rows.
    return std::get<BaselineKind>(predictor) == BaselineKind::LogisticRegression;
}

struct PreparedRun {
    LabeledDataset train;  // rebalanced when smote applies to the predictor
    LabeledDataset test;
    bool test_single_class = false;
    bool smote_applied = false;
    std::size_t synthetic_added = 0;
    std::vector<SmoteAuditEntry> smote_audit;
};

// Dataset build + split + (conditional) rebalance for one run.
inline PreparedRun prepare_run(const PipelineConfig& config, const LabeledSeries& labeled,
                               const RunSpec& spec, const RunOverrides& overrides = {}) {
    WindowConfig wc;
    wc.window_length = spec.window;
    wc.horizon = spec.horizon;
    wc.stride = config.stride;
    const FeatureSpec& features = overrides.features ? *overrides.features : config.features;
    const LabeledDataset dataset = build_dataset(labeled, wc, features);

    SplitResult split =
        config.split.mode == SplitMode::Chronological
            ? split_chronological(dataset, config.split.train_fraction, config.split.purge_gap)
            : split_shuffled(dataset, config.split.train_fraction,
                             derive_seed(cell_seed(config, spec), hash_name("split")));
    PreparedRun out;
    out.test_single_class = split.test_single_class;
    out.test = std::move(split.test);
    out.train = std::move(split.train);

    const bool smote_on = overrides.smote_enabled.value_or(config.smote.enabled);
    if (smote_on && predictor_uses_smote(spec.predictor)) {
        SmoteConfig sc;
        sc.k_neighbors = config.smote.k_neighbors;
        sc.target_ratio = config.smote.target_ratio;
        sc.standardize = overrides.smote_standardize.value_or(config.smote.standardize);
        sc.seed = derive_seed(cell_seed(config, spec), hash_name("smote"));
        SmoteResult balanced = smote(out.train, sc);
        out.synthetic_added = balanced.dataset.size() - out.train.size();
        out.train = std::move(balanced.dataset);
        out.smote_audit = std::move(balanced.audit);
        out.smote_applied = true;
    }
    return out;
}

inline AnyModel train_predictor(const PipelineConfig& config, const RunSpec& spec,
                                const LabeledDataset& train, const ThresholdSet& thresholds) {
    if (const auto* model = std::get_if<ModelKind>(&spec.predictor)) {
        if (*model == ModelKind::Forest) {
            ForestConfig fc = config.forest;
            fc.seed = derive_seed(run_seed(config, spec), hash_name("forest"));
            return train_forest(train, fc);
        }
        return train_boosted(train, config.boosted);
    }
    IsolationConfig ic = config.isolation;
    ic.seed = derive_seed(run_seed(config, spec), hash_name("isolation"));
    return train_baseline(std::get<BaselineKind>(spec.predictor), train, thresholds,
                          config.logistic, ic);
}

inline RunOutcome execute_run(const PipelineConfig& config, const LabeledSeries& labeled,
                              const ThresholdSet& thresholds, const RunSpec& spec,
                              const RunOverrides& overrides = {}) {
    RunOutcome out;
    out.spec = spec;
    try {
        PreparedRun prepared = prepare_run(config, labeled, spec, overrides);
        out.test_single_class = prepared.test_single_class;
        out.test_size = prepared.test.size();
        out.smote_applied = prepared.smote_applied;
        out.synthetic_added = prepared.synthetic_added;
        out.smote_audit = std::move(prepared.smote_audit);
        out.train_size = prepared.train.size();

        const AnyModel model = train_predictor(config, spec, prepared.train, thresholds);

        const PredictContext context{&labeled};
        out.predictions.reserve(prepared.test.size());
        out.truths.reserve(prepared.test.size());
        out.anchors.reserve(prepared.test.size());
        for (const auto& sample : prepared.test.samples) {
            out.predictions.push_back(predict(model, sample, context));
            out.truths.push_back(sample.label);
            out.anchors.push_back(sample.anchor_minute.value());
        }

        EvalResult eval = compute_metrics(out.predictions, out.truths);
        attach_bootstrap_cis(eval, out.predictions, out.truths,
                             {config.eval.bootstrap_resamples,
                              derive_seed(run_seed(config, spec), hash_name("bootstrap"))});
        out.confusion = eval.confusion;
        out.metrics = eval.metrics;
        out.specificity = eval.confusion.specificity();

        if (const auto* forest = std::get_if<ForestModel>(&model))
            out.importance = feature_importance(*forest);
        out.model_json = model_to_json(model);
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

struct McNemarRow {
    std::string cell;
    std::string model_a;
    std::string model_b;
    McNemarResult result;
};

namespace detail {

// Pairwise McNemar inside each cell; runs there share one split and truth set.
inline std::vector<McNemarRow> cell_mcnemar(const std::vector<RunOutcome>& runs) {
    std::vector<McNemarRow> rows;
    for (std::size_t a = 0; a < runs.size(); ++a) {
        if (!runs[a].ok) continue;
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            if (!runs[b].ok) continue;
            if (runs[a].spec.cell_id() != runs[b].spec.cell_id()) continue;
            if (runs[a].truths.size() != runs[b].truths.size()) continue;
            std::vector<BinaryLabel> labels_a, labels_b;
            labels_a.reserve(runs[a].predictions.size());
            labels_b.reserve(runs[b].predictions.size());
            for (const auto& p : runs[a].predictions) labels_a.push_back(p.label);
            for (const auto& p : runs[b].predictions) labels_b.push_back(p.label);
            rows.push_back({runs[a].spec.cell_id(), predictor_name(runs[a].spec.predictor),
                            predictor_name(runs[b].spec.predictor),
                            mcnemar(labels_a, labels_b, runs[a].truths)});
        }
    }
    return rows;
}

}  // namespace detail

struct GridOutcome {
    PipelineConfig config;
    ThresholdBuildResult thresholds;
    std::vector<RunOutcome> runs;  // plan order: windows x horizons x predictors
    std::vector<McNemarRow> mcnemar;
};

// Resolves the labeling limits per config. Percentile mode computes adaptive
// limits from the configured record scope and borrows fixed limits from the
// explicit/default values.
inline ThresholdBuildResult resolve_thresholds(const PipelineConfig& config,
                                               const TelemetrySeries& series) {
    switch (config.thresholds.mode) {
        case ThresholdMode::Defaults: return {ThresholdSet::defaults(), {}};
        case ThresholdMode::Explicit: {
            std::array<double, kSensorCount> fixed{}, adaptive{};
            for (std::size_t s = 0; s < kSensorCount; ++s) {
                fixed[s] = config.thresholds.explicit_values.sensors[s].fixed_limit;
                adaptive[s] = config.thresholds.explicit_values.sensors[s].adaptive_limit;
            }
            return make_thresholds(fixed, adaptive);
        }
        case ThresholdMode::Percentile: break;
    }
    TelemetrySeries scope = series;
    if (config.thresholds.scope == ThresholdScope::TrainPrefix) {
        const auto n_prefix = static_cast<std::size_t>(std::ceil(
            config.split.train_fraction * static_cast<double>(series.size()) - 1e-9));
        scope.records.resize(std::min(n_prefix, series.size()));
    }
    const auto adaptive = compute_adaptive_thresholds(scope, config.thresholds.percentile);
    std::array<double, kSensorCount> fixed{};
    for (std::size_t s = 0; s < kSensorCount; ++s)
        fixed[s] = config.thresholds.explicit_values.sensors[s].fixed_limit;
    return make_thresholds(fixed, adaptive);
}

inline std::vector<RunSpec> make_plan(const PipelineConfig& config) {
    std::vector<RunSpec> plan;
    for (std::int64_t window : config.windows) {
        for (std::int64_t horizon : config.horizons) {
            for (ModelKind model : config.models)
                plan.push_back({window, horizon, model});
            for (BaselineKind baseline : config.baselines)
                plan.push_back({window, horizon, baseline});
        }
    }
    return plan;
}

namespace detail {

inline void run_pool(std::size_t n, int jobs, const std::function<void(std::size_t)>& work) {
    const std::size_t width = std::min(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (width <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(width);
    for (std::size_t w = 0; w < width; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
        });
    }
    for (auto& worker : workers) worker.join();
}

inline nlohmann::json metric_to_json(const MetricValue& metric) {
    nlohmann::json j;
    j["value"] = metric.value ? nlohmann::json(*metric.value) : nlohmann::json();
    j["ci"] = metric.ci ? nlohmann::json::array({metric.ci->lo, metric.ci->hi})
                        : nlohmann::json();
    return j;
}

inline nlohmann::json run_metrics_json(const RunOutcome& run) {
    nlohmann::json j;
    j["run_id"] = run.spec.id();
    j["variant"] = run.variant;
    j["ok"] = run.ok;
    if (!run.ok) {
        j["error"] = run.error;
        return j;
    }
    j["confusion"] = {{"tp", run.confusion.tp},
                      {"fp", run.confusion.fp},
                      {"fn", run.confusion.fn},
                      {"tn", run.confusion.tn}};
    j["metrics"] = {{"recall", metric_to_json(run.metrics.recall)},
                    {"precision", metric_to_json(run.metrics.precision)},
                    {"f1", metric_to_json(run.metrics.f1)},
                    {"far", metric_to_json(run.metrics.far)},
                    {"auroc", metric_to_json(run.metrics.auroc)}};
    j["specificity"] = run.specificity ? nlohmann::json(*run.specificity) : nlohmann::json();
    j["sample_count"] = run.metrics.sample_count;
    j["test_single_class"] = run.test_single_class;
    j["train_size"] = run.train_size;
    j["test_size"] = run.test_size;
    j["synthetic_added"] = run.synthetic_added;
    j["smote_applied"] = run.smote_applied;
    return j;
}

inline nlohmann::json run_config_json(const PipelineConfig& config,
                                      const ThresholdBuildResult& thresholds,
                                      const RunOutcome& run) {
    nlohmann::json used;
    for (std::size_t s = 0; s < kSensorCount; ++s)
        used[kSensorNames[s]] = {{"fixed", thresholds.set.sensors[s].fixed_limit},
                                 {"adaptive", thresholds.set.sensors[s].adaptive_limit}};
    nlohmann::json clamped = nlohmann::json::array();
    for (SensorId sensor : thresholds.clamped) clamped.push_back(sensor_name(sensor));
    return {{"version", kPipelineVersion},
            {"run_id", run.spec.id()},
            {"variant", run.variant},
            {"cell", run.spec.cell_id()},
            {"window", run.spec.window},
            {"horizon", run.spec.horizon},
            {"predictor", predictor_name(run.spec.predictor)},
            {"seeds",
             {{"global", config.seed},
              {"cell", cell_seed(config, run.spec)},
              {"run", run_seed(config, run.spec)}}},
            {"thresholds_used", std::move(used)},
            {"clamped_sensors", std::move(clamped)},
            {"config", config_to_json(config)}};
}

inline std::string predictions_csv(const RunOutcome& run) {
    std::string out = "anchor_ts,truth,predicted,score\n";
    for (std::size_t i = 0; i < run.predictions.size(); ++i) {
        out += format_minute(run.anchors[i]);
        out.push_back(',');
        out += run.truths[i] == BinaryLabel::Positive ? "positive" : "negative";
        out.push_back(',');
        out += run.predictions[i].label == BinaryLabel::Positive ? "positive" : "negative";
        out.push_back(',');
        out += format_double(run.predictions[i].score);
        out.push_back('\n');
    }
    return out;
}

inline std::string importance_csv(const RunOutcome& run) {
    std::string out = "rank,feature,importance\n";
    for (std::size_t i = 0; i < run.importance.size(); ++i) {
        out += std::to_string(i + 1);
        out.push_back(',');
        out += run.importance[i].first;
        out.push_back(',');
        out += format_double(run.importance[i].second);
        out.push_back('\n');
    }
    return out;
}

inline void write_run_artifacts(const PipelineConfig& config,
                                const ThresholdBuildResult& thresholds, const RunOutcome& run,
                                const std::filesystem::path& run_dir) {
    std::filesystem::create_directories(run_dir);
    write_file((run_dir / "config.json").string(),
               run_config_json(config, thresholds, run).dump(2) + "\n");
    write_file((run_dir / "metrics.json").string(), run_metrics_json(run).dump(2) + "\n");
    if (!run.ok) {
        write_file((run_dir / "error.txt").string(), run.error + "\n");
        return;
    }
    write_file((run_dir / "confusion.csv").string(),
               "tp,fp,fn,tn\n" + std::to_string(run.confusion.tp) + "," +
                   std::to_string(run.confusion.fp) + "," + std::to_string(run.confusion.fn) +
                   "," + std::to_string(run.confusion.tn) + "\n");
    write_file((run_dir / "predictions.csv").string(), predictions_csv(run));
    if (!run.importance.empty())
        write_file((run_dir / "importance.csv").string(), importance_csv(run));
    if (run.smote_applied)
        write_file((run_dir / "smote_audit.csv").string(), smote_audit_to_csv(run.smote_audit));
    write_file((run_dir / "model.json").string(), run.model_json.dump() + "\n");
}

inline void release_heavy_fields(RunOutcome& run) {
    run.model_json = nlohmann::json();
    run.smote_audit.clear();
    run.smote_audit.shrink_to_fit();
}

inline std::string format_metric_cell(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string("NA");
}

}  // namespace detail

// Table-2-shaped recall summary: one row per (predictor, window), one column
// pair (EarlyWarning recall, Normal recall) per horizon.
inline std::string summary_csv(const GridOutcome& grid) {
    std::string out = "predictor,window";
    for (std::int64_t horizon : grid.config.horizons) {
        out += ",ew_recall_h" + std::to_string(horizon);
        out += ",normal_recall_h" + std::to_string(horizon);
    }
    out.push_back('\n');

    std::unordered_map<std::string, const RunOutcome*> by_id;
    for (const auto& run : grid.runs) by_id[run.spec.id()] = &run;

    std::vector<PredictorKind> predictors;
    for (ModelKind model : grid.config.models) predictors.emplace_back(model);
    for (BaselineKind baseline : grid.config.baselines) predictors.emplace_back(baseline);

    for (const auto& predictor : predictors) {
        for (std::int64_t window : grid.config.windows) {
            out += predictor_name(predictor);
            out += ",";
            out += std::to_string(window);
            for (std::int64_t horizon : grid.config.horizons) {
                const RunSpec spec{window, horizon, predictor};
                const auto it = by_id.find(spec.id());
                const RunOutcome* run =
                    it != by_id.end() && it->second->ok ? it->second : nullptr;
                out.push_back(',');
                out += detail::format_metric_cell(run ? run->metrics.recall.value : std::nullopt);
                out.push_back(',');
                out += detail::format_metric_cell(run ? run->specificity : std::nullopt);
            }
            out.push_back('\n');
        }
    }
    return out;
}

inline std::string mcnemar_csv(const std::vector<McNemarRow>& rows) {
    std::string out = "cell,model_a,model_b,discordant_b,discordant_c,statistic,p_value,method\n";
    for (const auto& row : rows) {
        out += row.cell + "," + row.model_a + "," + row.model_b + ",";
        out += std::to_string(row.result.b) + "," + std::to_string(row.result.c) + ",";
        out += row.result.statistic ? format_double(*row.result.statistic) : std::string("NA");
        out.push_back(',');
        out += format_double(row.result.p_value);
        out.push_back(',');
        out += row.result.exact ? "exact" : "chi2";
        out.push_back('\n');
    }
    return out;
}

// Plot-ready long format: one row per (run, metric).
inline std::string long_csv(const std::vector<RunOutcome>& runs) {
    std::string out = "run_id,variant,window,horizon,predictor,metric,value,ci_lo,ci_hi\n";
    const auto add = [&](const RunOutcome& run, const char* name, const MetricValue& metric) {
        out += run.spec.id() + "," + run.variant + "," + std::to_string(run.spec.window) + "," +
               std::to_string(run.spec.horizon) + "," + predictor_name(run.spec.predictor) + "," +
               name + ",";
        out += metric.value ? format_double(*metric.value) : std::string("NA");
        out.push_back(',');
        out += metric.ci ? format_double(metric.ci->lo) : std::string("NA");
        out.push_back(',');
        out += metric.ci ? format_double(metric.ci->hi) : std::string("NA");
        out.push_back('\n');
    };
    for (const auto& run : runs) {
        if (!run.ok) continue;
        add(run, "recall", run.metrics.recall);
        add(run, "precision", run.metrics.precision);
        add(run, "f1", run.metrics.f1);
        add(run, "far", run.metrics.far);
        add(run, "auroc", run.metrics.auroc);
        MetricValue specificity;
        specificity.value = run.specificity;
        add(run, "specificity", specificity);
    }
    return out;
}

inline std::string failures_csv(const std::vector<RunOutcome>& runs) {
    std::string out = "run_id,variant,error\n";
    for (const auto& run : runs) {
        if (run.ok) continue;
        std::string message = run.error;
        for (char& c : message)
            if (c == ',' || c == '\n') c = ';';
        out += run.spec.id() + "," + run.variant + "," + message + "\n";
    }
    return out;
}

// Top-level grid files; separated from run_grid so stored artifacts can be
// re-emitted without recomputation.
inline void emit_grid_files(const GridOutcome& grid, const std::string& output_dir) {
    const std::filesystem::path base_dir(output_dir);
    std::filesystem::create_directories(base_dir);
    write_file((base_dir / "config.json").string(), config_to_json(grid.config).dump(2) + "\n");
    write_file((base_dir / "summary.csv").string(), summary_csv(grid));
    write_file((base_dir / "mcnemar.csv").string(), mcnemar_csv(grid.mcnemar));
    write_file((base_dir / "long.csv").string(), long_csv(grid.runs));
    write_file((base_dir / "failures.csv").string(), failures_csv(grid.runs));
}

// Runs the full grid. With a non-empty output_dir, per-run artifacts are
// written as each run finishes and heavyweight fields (model JSON, audit) are
// released; summary files follow once every run is in. Errors in one run are
// recorded and never abort the sweep.
inline GridOutcome run_grid(const PipelineConfig& config, const TelemetrySeries& series,
                            int jobs = 1, const std::string& output_dir = "") {
    GridOutcome grid;
    grid.config = config;
    grid.thresholds = resolve_thresholds(config, series);
    const LabeledSeries labeled = label_series(series, grid.thresholds.set);

    const std::vector<RunSpec> plan = make_plan(config);
    grid.runs.resize(plan.size());
    const std::filesystem::path base_dir(output_dir);
    detail::run_pool(plan.size(), jobs, [&](std::size_t i) {
        RunOutcome outcome = execute_run(config, labeled, grid.thresholds.set, plan[i]);
        if (!output_dir.empty()) {
            try {
                detail::write_run_artifacts(config, grid.thresholds, outcome,
                                            base_dir / "runs" / outcome.spec.id());
            } catch (const std::exception& e) {
                outcome.ok = false;
                outcome.error = e.what();
            }
            detail::release_heavy_fields(outcome);
        }
        grid.runs[i] = std::move(outcome);
    });

    grid.mcnemar = detail::cell_mcnemar(grid.runs);

    if (!output_dir.empty()) emit_grid_files(grid, output_dir);
    return grid;
}

enum class AblationTag {
    NoSmote,
    MeanStdOnly,
    SensorSubset,
    SimplifiedLabels,
    WindowSweep,
    HorizonSweep,
    NoStandardizeKnn,
    ExcludeAbnormalHistory,
};

inline constexpr AblationTag kAllAblations[] = {
    AblationTag::NoSmote,       AblationTag::MeanStdOnly,
    AblationTag::SensorSubset,  AblationTag::SimplifiedLabels,
    AblationTag::WindowSweep,   AblationTag::HorizonSweep,
    AblationTag::NoStandardizeKnn, AblationTag::ExcludeAbnormalHistory,
};

inline const char* ablation_name(AblationTag tag) {
    switch (tag) {
        case AblationTag::NoSmote: return "no_smote";
        case AblationTag::MeanStdOnly: return "mean_std_only";
        case AblationTag::SensorSubset: return "sensor_subset";
        case AblationTag::SimplifiedLabels: return "simplified_labels";
        case AblationTag::WindowSweep: return "window_sweep";
        case AblationTag::HorizonSweep: return "horizon_sweep";
        case AblationTag::NoStandardizeKnn: return "no_standardize_knn";
        case AblationTag::ExcludeAbnormalHistory: return "exclude_abnormal_history";
    }
    return "unknown";
}

struct AblationEntry {
    AblationTag tag = AblationTag::NoSmote;
    RunOutcome run;
    // Paired McNemar vs base over anchor-matched test samples; absent when the
    // variant's ground truth differs at matched anchors (label or horizon
    // changes redefine the task).
    std::size_t matched_pairs = 0;
    std::optional<McNemarResult> vs_base;
};

struct AblationOutcome {
    PipelineConfig config;
    ThresholdBuildResult thresholds;
    RunOutcome base;
    std::vector<AblationEntry> entries;
};

namespace detail {

// Pairs two runs on their common anchors. Comparison is meaningful only when
// both runs agree on the truth at every matched anchor.
inline void compare_to_base(const RunOutcome& base, AblationEntry& entry) {
    if (!base.ok || !entry.run.ok) return;
    std::unordered_map<std::int64_t, std::size_t> base_index;
    base_index.reserve(base.anchors.size());
    for (std::size_t i = 0; i < base.anchors.size(); ++i) base_index[base.anchors[i]] = i;

    std::vector<BinaryLabel> base_labels, variant_labels, truths;
    bool truths_align = true;
    for (std::size_t i = 0; i < entry.run.anchors.size(); ++i) {
        const auto it = base_index.find(entry.run.anchors[i]);
        if (it == base_index.end()) continue;
        if (base.truths[it->second] != entry.run.truths[i]) {
            truths_align = false;
            break;
        }
        base_labels.push_back(base.predictions[it->second].label);
        variant_labels.push_back(entry.run.predictions[i].label);
        truths.push_back(entry.run.truths[i]);
    }
    entry.matched_pairs = truths.size();
    if (truths_align && !truths.empty())
        entry.vs_base = mcnemar(base_labels, variant_labels, truths);
}

}  // namespace detail

inline std::string ablations_csv(const AblationOutcome& ablation);

// Base run: first window x first horizon x first configured model, straight
// config. Each variant flips exactly one factor relative to that.
inline AblationOutcome run_ablations(const PipelineConfig& config, const TelemetrySeries& series,
                                     int jobs = 1, const std::string& output_dir = "") {
    AblationOutcome ablation;
    ablation.config = config;
    ablation.thresholds = resolve_thresholds(config, series);
    const LabeledSeries labeled = label_series(series, ablation.thresholds.set);

    // Fixed-only labeling: collapsing the adaptive limit onto the fixed limit
    // empties the EarlyWarning band, leaving Normal vs CriticalAlert.
    ThresholdSet simplified = ablation.thresholds.set;
    for (auto& sensor : simplified.sensors) sensor.adaptive_limit = sensor.fixed_limit;
    const LabeledSeries simplified_labeled = label_series(series, simplified);

    RunSpec base_spec;
    base_spec.window = config.windows.front();
    base_spec.horizon = config.horizons.front();
    base_spec.predictor = config.models.empty() ? PredictorKind(ModelKind::Forest)
                                                : PredictorKind(config.models.front());

    struct VariantPlan {
        AblationTag tag;
        RunSpec spec;
        RunOverrides overrides;
        const LabeledSeries* labels;
    };
    std::vector<VariantPlan> plan;
    for (AblationTag tag : kAllAblations) {
        VariantPlan v{tag, base_spec, {}, &labeled};
        switch (tag) {
            case AblationTag::NoSmote: v.overrides.smote_enabled = false; break;
            case AblationTag::MeanStdOnly: {
                FeatureSpec fs = config.features;
                fs.stats = {StatKind::Mean, StatKind::Std};
                v.overrides.features = std::move(fs);
                break;
            }
            case AblationTag::SensorSubset: {
                FeatureSpec fs = config.features;
                fs.sensors = {SensorId::Temperature, SensorId::Flow, SensorId::Pressure};
                v.overrides.features = std::move(fs);
                break;
            }
            case AblationTag::SimplifiedLabels: v.labels = &simplified_labeled; break;
            case AblationTag::WindowSweep:
                v.spec.window = config.windows.size() > 1 ? config.windows.back()
                                                          : config.windows.front() * 2;
                break;
            case AblationTag::HorizonSweep:
                v.spec.horizon = config.horizons.size() > 1 ? config.horizons.back()
                                                            : config.horizons.front() * 2;
                break;
            case AblationTag::NoStandardizeKnn:
                v.overrides.smote_standardize = false;
                break;
            case AblationTag::ExcludeAbnormalHistory: {
                FeatureSpec fs = config.features;
                fs.exclude_abnormal_history = true;
                v.overrides.features = std::move(fs);
                break;
            }
        }
        plan.push_back(std::move(v));
    }

    const std::filesystem::path base_dir(output_dir);
    ablation.base = execute_run(config, labeled, ablation.thresholds.set, base_spec);
    ablation.base.variant = "base";
    if (!output_dir.empty()) {
        detail::write_run_artifacts(config, ablation.thresholds, ablation.base,
                                    base_dir / "runs" / "ablation_base");
        detail::release_heavy_fields(ablation.base);
    }

    ablation.entries.resize(plan.size());
    detail::run_pool(plan.size(), jobs, [&](std::size_t i) {
        AblationEntry entry;
        entry.tag = plan[i].tag;
        const ThresholdSet& set =
            plan[i].tag == AblationTag::SimplifiedLabels ? simplified : ablation.thresholds.set;
        entry.run = execute_run(config, *plan[i].labels, set, plan[i].spec, plan[i].overrides);
        entry.run.variant = ablation_name(plan[i].tag);
        detail::compare_to_base(ablation.base, entry);
        if (!output_dir.empty()) {
            try {
                detail::write_run_artifacts(config, ablation.thresholds, entry.run,
                                            base_dir / "runs" /
                                                ("ablation_" + entry.run.variant));
            } catch (const std::exception& e) {
                entry.run.ok = false;
                entry.run.error = e.what();
            }
            detail::release_heavy_fields(entry.run);
        }
        ablation.entries[i] = std::move(entry);
    });

    // Names are prefixed so an ablation sweep can share the grid's output root
    // without clobbering its files.
    if (!output_dir.empty()) {
        std::filesystem::create_directories(base_dir);
        write_file((base_dir / "config.json").string(), config_to_json(config).dump(2) + "\n");
        write_file((base_dir / "ablations.csv").string(), ablations_csv(ablation));
        std::vector<RunOutcome> all;
        all.push_back(ablation.base);
        for (const auto& entry : ablation.entries) all.push_back(entry.run);
        write_file((base_dir / "ablation_long.csv").string(), long_csv(all));
        write_file((base_dir / "ablation_failures.csv").string(), failures_csv(all));
    }
    return ablation;
}

inline std::string ablations_csv(const AblationOutcome& ablation) {
    const auto delta = [](const std::optional<double>& variant,
                          const std::optional<double>& base) -> std::string {
        if (!variant || !base) return "NA";
        return format_double(*variant - *base);
    };
    std::string out =
        "variant,run_id,window,horizon,ok,recall,recall_delta,precision,precision_delta,"
        "f1,f1_delta,far,far_delta,auroc,auroc_delta,matched_pairs,mcnemar_b,mcnemar_c,"
        "mcnemar_p,mcnemar_method,error\n";
    const auto row = [&](const std::string& variant, const RunOutcome& run,
                         std::size_t matched, const std::optional<McNemarResult>& vs_base,
                         bool is_base) {
        const MetricReport& base = ablation.base.metrics;
        out += variant + "," + run.spec.id() + "," + std::to_string(run.spec.window) + "," +
               std::to_string(run.spec.horizon) + ",";
        out += run.ok ? "true" : "false";
        const auto cell = [&](const MetricValue& metric, const MetricValue& base_metric) {
            out.push_back(',');
            out += detail::format_metric_cell(run.ok ? metric.value : std::nullopt);
            out.push_back(',');
            out += is_base || !run.ok ? "NA" : delta(metric.value, base_metric.value);
        };
        cell(run.metrics.recall, base.recall);
        cell(run.metrics.precision, base.precision);
        cell(run.metrics.f1, base.f1);
        cell(run.metrics.far, base.far);
        cell(run.metrics.auroc, base.auroc);
        out.push_back(',');
        out += std::to_string(matched);
        if (vs_base) {
            out += "," + std::to_string(vs_base->b) + "," + std::to_string(vs_base->c) + "," +
                   format_double(vs_base->p_value) + "," + (vs_base->exact ? "exact" : "chi2");
        } else {
            out += ",NA,NA,NA,NA";
        }
        out.push_back(',');
        std::string message = run.error;
        for (char& c : message)
            if (c == ',' || c == '\n') c = ';';
        out += message;
        out.push_back('\n');
    };
    row("base", ablation.base, 0, std::nullopt, true);
    for (const auto& entry : ablation.entries)
        row(ablation_name(entry.tag), entry.run, entry.matched_pairs, entry.vs_base, false);
    return out;
}

struct AcquiredData {
    TelemetrySeries series;
    std::size_t dropped_rows = 0;
    std::size_t duplicate_rows = 0;
    std::size_t filled_records = 0;
    std::size_t discarded_spans = 0;
};

// Materializes the configured data source: a freshly generated synthetic
// series (seeded from the global seed) or an ingested and gap-repaired CSV.
inline AcquiredData acquire_series(const PipelineConfig& config) {
    AcquiredData out;
    if (config.data.source == DataSource::Synthetic) {
        SyntheticProfile profile = config.data.synthetic;
        profile.seed = stage_seed(config.seed, "generate");
        out.series = generate_synthetic(profile);
        return out;
    }
    IngestResult ingest = ingest_csv_text(read_file(config.data.csv_path));
    out.dropped_rows = ingest.dropped_rows;
    out.duplicate_rows = ingest.duplicate_rows;
    RepairResult repair = repair_gaps(ingest.series, config.data.max_gap);
    out.filled_records = repair.filled_records;
    out.discarded_spans = repair.discarded.size();
    out.series = std::move(repair.series);
    return out;
}

namespace detail {

inline MetricValue metric_from_json(const nlohmann::json& j) {
    MetricValue out;
    if (!j.at("value").is_null()) out.value = j.at("value").get<double>();
    if (!j.at("ci").is_null())
        out.ci = ConfidenceInterval{j.at("ci")[0].get<double>(), j.at("ci")[1].get<double>()};
    return out;
}

inline void load_predictions_csv(const std::string& text, RunOutcome& run) {
    const auto lines = split_lines(text);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != 4) throw DataError("predictions.csv: expected 4 columns");
        const auto minute = parse_minute(cells[0]);
        if (!minute)
            throw DataError("predictions.csv: bad timestamp '" + std::string(cells[0]) + "'");
        run.anchors.push_back(*minute);
        run.truths.push_back(cells[1] == "positive" ? BinaryLabel::Positive
                                                    : BinaryLabel::Negative);
        Prediction prediction;
        prediction.label =
            cells[2] == "positive" ? BinaryLabel::Positive : BinaryLabel::Negative;
        const auto score = parse_double(cells[3]);
        if (!score)
            throw DataError("predictions.csv: bad score '" + std::string(cells[3]) + "'");
        prediction.score = *score;
        run.predictions.push_back(prediction);
    }
}

}  // namespace detail

// Rebuilds a GridOutcome from stored artifacts so summary files can be
// re-emitted byte-identically. Model JSON is left on disk untouched.
inline GridOutcome load_grid_outcome(const std::string& output_dir) {
    const std::filesystem::path base_dir(output_dir);
    GridOutcome grid;
    nlohmann::json config_json;
    try {
        config_json = nlohmann::json::parse(read_file((base_dir / "config.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("stored config.json: ") + e.what());
    }
    grid.config = config_from_json(config_json);

    for (const RunSpec& spec : make_plan(grid.config)) {
        RunOutcome run;
        run.spec = spec;
        const std::filesystem::path run_dir = base_dir / "runs" / spec.id();
        nlohmann::json metrics;
        try {
            metrics = nlohmann::json::parse(read_file((run_dir / "metrics.json").string()));
            run.ok = metrics.at("ok").get<bool>();
            if (run.ok) {
                const auto& confusion = metrics.at("confusion");
                run.confusion.tp = confusion.at("tp").get<std::size_t>();
                run.confusion.fp = confusion.at("fp").get<std::size_t>();
                run.confusion.fn = confusion.at("fn").get<std::size_t>();
                run.confusion.tn = confusion.at("tn").get<std::size_t>();
                const auto& values = metrics.at("metrics");
                run.metrics.recall = detail::metric_from_json(values.at("recall"));
                run.metrics.precision = detail::metric_from_json(values.at("precision"));
                run.metrics.f1 = detail::metric_from_json(values.at("f1"));
                run.metrics.far = detail::metric_from_json(values.at("far"));
                run.metrics.auroc = detail::metric_from_json(values.at("auroc"));
                if (!metrics.at("specificity").is_null())
                    run.specificity = metrics.at("specificity").get<double>();
                run.metrics.sample_count = metrics.at("sample_count").get<std::size_t>();
                run.test_single_class = metrics.at("test_single_class").get<bool>();
                run.train_size = metrics.at("train_size").get<std::size_t>();
                run.test_size = metrics.at("test_size").get<std::size_t>();
                run.synthetic_added = metrics.at("synthetic_added").get<std::size_t>();
                run.smote_applied = metrics.at("smote_applied").get<bool>();
                detail::load_predictions_csv(read_file((run_dir / "predictions.csv").string()),
                                             run);
            } else {
                run.error = metrics.value("error", std::string("unknown"));
            }
        } catch (const nlohmann::json::exception& e) {
            run.ok = false;
            run.error = std::string("stored metrics.json unreadable: ") + e.what();
        } catch (const IoError& e) {
            run.ok = false;
            run.error = e.what();
        }
        grid.runs.push_back(std::move(run));
    }

    grid.mcnemar = detail::cell_mcnemar(grid.runs);
    return grid;
}

}  // namespace pumpcast
