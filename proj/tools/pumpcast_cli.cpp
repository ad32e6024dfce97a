#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pumpcast/pumpcast.hpp"

namespace {

using namespace pumpcast;
namespace fs = std::filesystem;

void print_error(const char* type, const std::string& message) {
    nlohmann::json j{{"error", {{"type", type}, {"message", message}}}};
    std::cerr << j.dump() << "\n";
}

std::string metric_text(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string("NA");
}

void print_run_line(const RunOutcome& run) {
    std::cout << run.spec.id() << ": recall=" << metric_text(run.metrics.recall.value)
              << " precision=" << metric_text(run.metrics.precision.value)
              << " f1=" << metric_text(run.metrics.f1.value)
              << " far=" << metric_text(run.metrics.far.value)
              << " auroc=" << metric_text(run.metrics.auroc.value)
              << " n=" << run.metrics.sample_count << "\n";
}

struct StageInputs {
    AcquiredData data;
    ThresholdBuildResult thresholds;
    LabeledSeries labeled;
};

StageInputs load_stage_inputs(const PipelineConfig& config) {
    StageInputs inputs;
    inputs.data = acquire_series(config);
    inputs.thresholds = resolve_thresholds(config, inputs.data.series);
    for (SensorId sensor : inputs.thresholds.clamped)
        std::cerr << "warning: adaptive limit for " << sensor_name(sensor)
                  << " exceeded the fixed limit and was clamped\n";
    inputs.labeled = label_series(inputs.data.series, inputs.thresholds.set);
    return inputs;
}

PredictorKind parse_predictor(const std::string& name) {
    if (const auto model = model_from_name(name)) return *model;
    if (const auto baseline = baseline_from_name(name)) return *baseline;
    throw ConfigError("unknown model '" + name + "'");
}

RunSpec spec_from_options(const PipelineConfig& config, std::int64_t window, std::int64_t horizon,
                          const std::string& model) {
    RunSpec spec;
    spec.window = window > 0 ? window : config.windows.front();
    spec.horizon = horizon > 0 ? horizon : config.horizons.front();
    spec.predictor = parse_predictor(model);
    return spec;
}

std::string default_path(const PipelineConfig& config, const std::string& name) {
    fs::create_directories(config.output_dir);
    return (fs::path(config.output_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Short-horizon pump fault forecasting pipeline"};
    app.require_subcommand(0, 1);
    // Global flags may also trail the subcommand (pumpcast grid --jobs 4).
    app.fallthrough();

    std::string config_path;
    bool print_config = false;
    int jobs = 1;
    std::optional<std::uint64_t> seed_override;
    std::string output_override;
    app.add_option("--config", config_path, "JSON config file (built-in defaults when omitted)");
    app.add_flag("--print-config", print_config,
                 "print the fully resolved config (all defaults applied) and exit");
    app.add_option("--jobs", jobs, "worker pool width for grid and ablate")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed_override, "override the global seed");
    app.add_option("--output-dir", output_override, "override the configured output directory");

    std::string out_path;
    std::int64_t window = 0;
    std::int64_t horizon = 0;
    std::string model = "forest";

    auto* generate = app.add_subcommand("generate", "write synthetic telemetry as CSV");
    generate->add_option("--out", out_path, "output CSV path");

    auto* label = app.add_subcommand("label", "ingest or generate data and write labeled CSV");
    label->add_option("--out", out_path, "output CSV path");

    auto* features = app.add_subcommand("features", "write sliding-window samples as CSV");
    features->add_option("--window", window, "window length in minutes");
    features->add_option("--horizon", horizon, "forecast horizon in minutes");
    features->add_option("--out", out_path, "output CSV path");

    auto* train = app.add_subcommand("train", "train one model and write it as JSON");
    train->add_option("--model", model, "forest, boosted, or a baseline name");
    train->add_option("--window", window, "window length in minutes");
    train->add_option("--horizon", horizon, "forecast horizon in minutes");
    train->add_option("--out", out_path, "output model path");

    auto* evaluate = app.add_subcommand("evaluate", "train + evaluate one run, write artifacts");
    evaluate->add_option("--model", model, "forest, boosted, or a baseline name");
    evaluate->add_option("--window", window, "window length in minutes");
    evaluate->add_option("--horizon", horizon, "forecast horizon in minutes");

    auto* grid = app.add_subcommand("grid", "run the full window x horizon x model sweep");
    auto* ablate = app.add_subcommand("ablate", "run the single-factor ablation suite");
    auto* report = app.add_subcommand("report", "re-emit summary files from stored run artifacts");

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (seed_override) config.seed = *seed_override;
        if (!output_override.empty()) config.output_dir = output_override;

        if (print_config) {
            std::cout << config_to_json(config).dump(2) << "\n";
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 2;
        }

        if (generate->parsed()) {
            SyntheticProfile profile = config.data.synthetic;
            profile.seed = stage_seed(config.seed, "generate");
            const TelemetrySeries series = generate_synthetic(profile);
            const std::string path =
                out_path.empty() ? default_path(config, "telemetry.csv") : out_path;
            write_csv(series, path);
            std::cout << "wrote " << path << " (" << series.size() << " records)\n";
            return 0;
        }

        if (label->parsed()) {
            const StageInputs inputs = load_stage_inputs(config);
            const std::string path =
                out_path.empty() ? default_path(config, "labeled.csv") : out_path;
            write_file(path, labeled_series_to_csv(inputs.labeled));
            std::cout << "wrote " << path << " (" << inputs.labeled.size() << " records)\n";
            return 0;
        }

        if (features->parsed()) {
            const StageInputs inputs = load_stage_inputs(config);
            WindowConfig wc;
            wc.window_length = window > 0 ? window : config.windows.front();
            wc.horizon = horizon > 0 ? horizon : config.horizons.front();
            wc.stride = config.stride;
            const LabeledDataset dataset = build_dataset(inputs.labeled, wc, config.features);
            const std::string name = "features_L" + std::to_string(wc.window_length) + "_h" +
                                     std::to_string(wc.horizon) + ".csv";
            const std::string path = out_path.empty() ? default_path(config, name) : out_path;
            write_file(path, dataset_to_csv(dataset));
            std::cout << "wrote " << path << " (" << dataset.size() << " samples)\n";
            return 0;
        }

        if (train->parsed()) {
            const StageInputs inputs = load_stage_inputs(config);
            const RunSpec spec = spec_from_options(config, window, horizon, model);
            const PreparedRun prepared = prepare_run(config, inputs.labeled, spec);
            const AnyModel trained =
                train_predictor(config, spec, prepared.train, inputs.thresholds.set);
            const std::string path = out_path.empty()
                                         ? default_path(config, "model_" + spec.id() + ".json")
                                         : out_path;
            save_model(trained, path);
            std::cout << "wrote " << path << " (trained on " << prepared.train.size()
                      << " samples)\n";
            return 0;
        }

        if (evaluate->parsed()) {
            const StageInputs inputs = load_stage_inputs(config);
            const RunSpec spec = spec_from_options(config, window, horizon, model);
            const RunOutcome outcome =
                execute_run(config, inputs.labeled, inputs.thresholds.set, spec);
            if (!outcome.ok) {
                print_error("runtime", "run " + spec.id() + " failed: " + outcome.error);
                return 1;
            }
            detail::write_run_artifacts(config, inputs.thresholds, outcome,
                                        fs::path(config.output_dir) / "runs" / spec.id());
            print_run_line(outcome);
            return 0;
        }

        if (grid->parsed()) {
            const AcquiredData data = acquire_series(config);
            const GridOutcome outcome = run_grid(config, data.series, jobs, config.output_dir);
            std::size_t failed = 0;
            for (const auto& run : outcome.runs) failed += run.ok ? 0 : 1;
            std::cout << "wrote " << config.output_dir << " (" << outcome.runs.size() << " runs, "
                      << failed << " failed)\n";
            return 0;
        }

        if (ablate->parsed()) {
            const AcquiredData data = acquire_series(config);
            const AblationOutcome outcome =
                run_ablations(config, data.series, jobs, config.output_dir);
            std::size_t failed = outcome.base.ok ? 0 : 1;
            for (const auto& entry : outcome.entries) failed += entry.run.ok ? 0 : 1;
            std::cout << "wrote " << config.output_dir << " (" << (outcome.entries.size() + 1)
                      << " runs, " << failed << " failed)\n";
            return 0;
        }

        if (report->parsed()) {
            const GridOutcome outcome = load_grid_outcome(config.output_dir);
            emit_grid_files(outcome, config.output_dir);
            std::cout << "re-emitted summary files in " << config.output_dir << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        print_error("config", e.what());
        return 2;
    } catch (const DataError& e) {
        print_error("data", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 1;
    }
    return 0;
}
