#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumpcast/balance.hpp"
#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/labeling.hpp"
#include "pumpcast/models/baselines.hpp"
#include "pumpcast/models/boosted.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/models/isolation.hpp"
#include "pumpcast/models/linear.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/telemetry.hpp"
#include "pumpcast/textio.hpp"

namespace pumpcast {

// The one global seed fans out to per-stage seeds through this derivation;
// stage names are listed in the README. Modules split further internally.
inline std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage) {
    return derive_seed(global_seed, hash_name(stage));
}

enum class DataSource { Synthetic, Csv };
enum class ThresholdMode { Defaults, Percentile, Explicit };
enum class ThresholdScope { TrainPrefix, FullSeries };
enum class SplitMode { Chronological, Shuffled };
enum class ModelKind { Forest, Boosted };

inline const char* model_name(ModelKind kind) {
    return kind == ModelKind::Forest ? "forest" : "boosted";
}

inline std::optional<ModelKind> model_from_name(std::string_view name) {
    if (name == "forest") return ModelKind::Forest;
    if (name == "boosted") return ModelKind::Boosted;
    return std::nullopt;
}

struct DataConfig {
    DataSource source = DataSource::Synthetic;
    std::string csv_path;
    std::int64_t max_gap = 5;  // largest interior gap repaired by interpolation
    SyntheticProfile synthetic = default_synthetic_profile();

    // A quiet week of plausible pump telemetry with no fault episodes; demo
    // configs override this with drifting profiles.
    static SyntheticProfile default_synthetic_profile() {
        SyntheticProfile profile;
        profile.duration_minutes = 7 * 1440;
        profile.sensors[0] = {1.20, 0.08, 1440.0, 0.10};     // vibration, mm/s
        profile.sensors[1] = {50.0, 0.80, 1440.0, 1.50};     // temperature, C
        profile.sensors[2] = {2600.0, 15.0, 1440.0, 25.0};   // flow, m3/h
        profile.sensors[3] = {4.20, 0.10, 1440.0, 0.15};     // pressure, bar
        profile.sensors[4] = {225.0, 1.50, 1440.0, 2.00};    // current, A
        return profile;
    }
};

struct ThresholdConfig {
    ThresholdMode mode = ThresholdMode::Defaults;
    // Percentile mode: adaptive limits = this percentile of historical values.
    double percentile = 0.95;
    // Which records count as "historical": the chronological training prefix
    // (leakage-safe default) or the full series.
    ThresholdScope scope = ThresholdScope::TrainPrefix;
    // Explicit mode uses both limits; percentile mode borrows the fixed limits.
    ThresholdSet explicit_values = ThresholdSet::defaults();
};

struct SmoteSection {
    bool enabled = true;
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;
    bool standardize = true;
};

struct SplitSection {
    double train_fraction = 0.75;
    SplitMode mode = SplitMode::Chronological;
    std::size_t purge_gap = 0;  // samples dropped from the test head; 0 = off
};

struct EvalSection {
    std::size_t bootstrap_resamples = 2000;
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    DataConfig data;
    ThresholdConfig thresholds;
    std::vector<std::int64_t> windows = {60, 120};
    std::vector<std::int64_t> horizons = {5, 15, 30};
    std::int64_t stride = 1;
    FeatureSpec features;
    SmoteSection smote;
    SplitSection split;
    EvalSection eval;
    std::vector<ModelKind> models = {ModelKind::Forest, ModelKind::Boosted};
    std::vector<BaselineKind> baselines = {kAllBaselines, kAllBaselines + 6};
    ForestConfig forest;
    BoostedConfig boosted;
    LogisticConfig logistic;
    IsolationConfig isolation;

    SmoteConfig smote_config() const {
        SmoteConfig out;
        out.k_neighbors = smote.k_neighbors;
        out.target_ratio = smote.target_ratio;
        out.standardize = smote.standardize;
        out.seed = stage_seed(seed, "smote");
        return out;
    }
};

namespace detail {

// Strict schema: any key outside `allowed` fails with its full dotted path.
inline void require_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& path) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* name : allowed)
            if (item.key() == name) { known = true; break; }
        if (!known)
            throw ConfigError("unknown config key '" +
                              (path.empty() ? item.key() : path + "." + item.key()) + "'");
    }
}

inline SensorId parse_sensor(const nlohmann::json& j, const std::string& path) {
    const auto name = j.get<std::string>();
    const auto sensor = sensor_from_name(name);
    if (!sensor) throw ConfigError(path + ": unknown sensor '" + name + "'");
    return *sensor;
}

inline void parse_synthetic(const nlohmann::json& j, SyntheticProfile& profile,
                            const std::string& path) {
    require_keys(j, {"duration_minutes", "sensors", "episodes"}, path);
    if (j.contains("duration_minutes"))
        profile.duration_minutes = j.at("duration_minutes").get<std::int64_t>();
    if (j.contains("sensors")) {
        const auto& sensors = j.at("sensors");
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            if (!sensors.contains(kSensorNames[s])) continue;
            const auto& entry = sensors.at(kSensorNames[s]);
            const std::string sub = path + ".sensors." + kSensorNames[s];
            require_keys(entry, {"baseline", "noise_std", "seasonal_period", "seasonal_amplitude"},
                         sub);
            auto& sensor = profile.sensors[s];
            if (entry.contains("baseline")) sensor.baseline = entry.at("baseline").get<double>();
            if (entry.contains("noise_std")) sensor.noise_std = entry.at("noise_std").get<double>();
            if (entry.contains("seasonal_period"))
                sensor.seasonal_period = entry.at("seasonal_period").get<double>();
            if (entry.contains("seasonal_amplitude"))
                sensor.seasonal_amplitude = entry.at("seasonal_amplitude").get<double>();
        }
        for (const auto& item : sensors.items()) {
            if (!sensor_from_name(item.key()))
                throw ConfigError("unknown config key '" + path + ".sensors." + item.key() + "'");
        }
    }
    if (j.contains("episodes")) {
        profile.episodes.clear();
        std::size_t index = 0;
        for (const auto& entry : j.at("episodes")) {
            const std::string sub = path + ".episodes[" + std::to_string(index++) + "]";
            require_keys(entry,
                         {"start_minute", "ramp_minutes", "duration_minutes", "severity",
                          "sensors"},
                         sub);
            FaultEpisode episode;
            episode.start_minute = entry.at("start_minute").get<std::int64_t>();
            episode.ramp_minutes = entry.at("ramp_minutes").get<std::int64_t>();
            episode.duration_minutes = entry.at("duration_minutes").get<std::int64_t>();
            episode.severity = entry.at("severity").get<double>();
            for (const auto& sensor : entry.at("sensors"))
                episode.sensors.push_back(parse_sensor(sensor, sub + ".sensors"));
            profile.episodes.push_back(std::move(episode));
        }
    }
}

inline void parse_threshold_values(const nlohmann::json& j, ThresholdSet& set,
                                   const std::string& path) {
    for (const auto& item : j.items()) {
        if (!sensor_from_name(item.key()))
            throw ConfigError("unknown config key '" + path + "." + item.key() + "'");
    }
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        if (!j.contains(kSensorNames[s])) continue;
        const auto& entry = j.at(kSensorNames[s]);
        const std::string sub = path + "." + kSensorNames[s];
        require_keys(entry, {"fixed", "adaptive"}, sub);
        if (entry.contains("fixed")) set.sensors[s].fixed_limit = entry.at("fixed").get<double>();
        if (entry.contains("adaptive"))
            set.sensors[s].adaptive_limit = entry.at("adaptive").get<double>();
    }
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig config;
    detail::require_keys(j,
                         {"seed", "output_dir", "data", "thresholds", "windows", "horizons",
                          "stride", "features", "smote", "split", "eval", "models", "baselines",
                          "forest", "boosted", "logistic", "isolation"},
                         "");
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("data")) {
        const auto& data = j.at("data");
        detail::require_keys(data, {"source", "csv_path", "max_gap", "synthetic"}, "data");
        if (data.contains("source")) {
            const auto source = data.at("source").get<std::string>();
            if (source == "synthetic") config.data.source = DataSource::Synthetic;
            else if (source == "csv") config.data.source = DataSource::Csv;
            else throw ConfigError("data.source must be 'synthetic' or 'csv'");
        }
        if (data.contains("csv_path")) config.data.csv_path = data.at("csv_path").get<std::string>();
        if (data.contains("max_gap")) config.data.max_gap = data.at("max_gap").get<std::int64_t>();
        if (data.contains("synthetic"))
            detail::parse_synthetic(data.at("synthetic"), config.data.synthetic, "data.synthetic");
    }

    if (j.contains("thresholds")) {
        const auto& thresholds = j.at("thresholds");
        detail::require_keys(thresholds, {"mode", "percentile", "scope", "values"}, "thresholds");
        if (thresholds.contains("mode")) {
            const auto mode = thresholds.at("mode").get<std::string>();
            if (mode == "defaults") config.thresholds.mode = ThresholdMode::Defaults;
            else if (mode == "percentile") config.thresholds.mode = ThresholdMode::Percentile;
            else if (mode == "explicit") config.thresholds.mode = ThresholdMode::Explicit;
            else throw ConfigError("thresholds.mode must be 'defaults', 'percentile' or 'explicit'");
        }
        if (thresholds.contains("percentile"))
            config.thresholds.percentile = thresholds.at("percentile").get<double>();
        if (thresholds.contains("scope")) {
            const auto scope = thresholds.at("scope").get<std::string>();
            if (scope == "train_prefix") config.thresholds.scope = ThresholdScope::TrainPrefix;
            else if (scope == "full_series") config.thresholds.scope = ThresholdScope::FullSeries;
            else throw ConfigError("thresholds.scope must be 'train_prefix' or 'full_series'");
        }
        if (thresholds.contains("values"))
            detail::parse_threshold_values(thresholds.at("values"),
                                           config.thresholds.explicit_values, "thresholds.values");
    }

    if (j.contains("windows"))
        config.windows = j.at("windows").get<std::vector<std::int64_t>>();
    if (j.contains("horizons"))
        config.horizons = j.at("horizons").get<std::vector<std::int64_t>>();
    if (j.contains("stride")) config.stride = j.at("stride").get<std::int64_t>();

    if (j.contains("features")) {
        const auto& features = j.at("features");
        detail::require_keys(features, {"stats", "sensors", "exclude_abnormal_history"},
                             "features");
        if (features.contains("stats")) {
            config.features.stats.clear();
            for (const auto& entry : features.at("stats")) {
                const auto name = entry.get<std::string>();
                const auto stat = stat_from_name(name);
                if (!stat) throw ConfigError("features.stats: unknown stat '" + name + "'");
                config.features.stats.push_back(*stat);
            }
        }
        if (features.contains("sensors")) {
            config.features.sensors.clear();
            for (const auto& entry : features.at("sensors"))
                config.features.sensors.push_back(
                    detail::parse_sensor(entry, "features.sensors"));
        }
        if (features.contains("exclude_abnormal_history"))
            config.features.exclude_abnormal_history =
                features.at("exclude_abnormal_history").get<bool>();
    }

    if (j.contains("smote")) {
        const auto& smote = j.at("smote");
        detail::require_keys(smote, {"enabled", "k_neighbors", "target_ratio", "standardize"},
                             "smote");
        if (smote.contains("enabled")) config.smote.enabled = smote.at("enabled").get<bool>();
        if (smote.contains("k_neighbors"))
            config.smote.k_neighbors = smote.at("k_neighbors").get<std::size_t>();
        if (smote.contains("target_ratio"))
            config.smote.target_ratio = smote.at("target_ratio").get<double>();
        if (smote.contains("standardize"))
            config.smote.standardize = smote.at("standardize").get<bool>();
    }

    if (j.contains("split")) {
        const auto& split = j.at("split");
        detail::require_keys(split, {"train_fraction", "mode", "purge_gap"}, "split");
        if (split.contains("train_fraction"))
            config.split.train_fraction = split.at("train_fraction").get<double>();
        if (split.contains("mode")) {
            const auto mode = split.at("mode").get<std::string>();
            if (mode == "chronological") config.split.mode = SplitMode::Chronological;
            else if (mode == "shuffled") config.split.mode = SplitMode::Shuffled;
            else throw ConfigError("split.mode must be 'chronological' or 'shuffled'");
        }
        if (split.contains("purge_gap"))
            config.split.purge_gap = split.at("purge_gap").get<std::size_t>();
    }

    if (j.contains("eval")) {
        const auto& eval = j.at("eval");
        detail::require_keys(eval, {"bootstrap_resamples"}, "eval");
        if (eval.contains("bootstrap_resamples"))
            config.eval.bootstrap_resamples = eval.at("bootstrap_resamples").get<std::size_t>();
    }

    if (j.contains("models")) {
        config.models.clear();
        for (const auto& entry : j.at("models")) {
            const auto name = entry.get<std::string>();
            const auto kind = model_from_name(name);
            if (!kind) throw ConfigError("models: unknown model '" + name + "'");
            config.models.push_back(*kind);
        }
    }
    if (j.contains("baselines")) {
        config.baselines.clear();
        for (const auto& entry : j.at("baselines")) {
            const auto name = entry.get<std::string>();
            const auto kind = baseline_from_name(name);
            if (!kind) throw ConfigError("baselines: unknown baseline '" + name + "'");
            config.baselines.push_back(*kind);
        }
    }

    if (j.contains("forest")) {
        const auto& forest = j.at("forest");
        detail::require_keys(
            forest, {"n_trees", "max_depth", "min_samples_leaf", "features_per_split", "bootstrap"},
            "forest");
        if (forest.contains("n_trees")) config.forest.n_trees = forest.at("n_trees").get<int>();
        if (forest.contains("max_depth"))
            config.forest.max_depth = forest.at("max_depth").get<int>();
        if (forest.contains("min_samples_leaf"))
            config.forest.min_samples_leaf = forest.at("min_samples_leaf").get<int>();
        if (forest.contains("features_per_split"))
            config.forest.features_per_split = forest.at("features_per_split").get<int>();
        if (forest.contains("bootstrap"))
            config.forest.bootstrap = forest.at("bootstrap").get<bool>();
    }

    if (j.contains("boosted")) {
        const auto& boosted = j.at("boosted");
        detail::require_keys(
            boosted, {"rounds", "learning_rate", "max_depth", "min_samples_leaf", "lambda", "gamma"},
            "boosted");
        if (boosted.contains("rounds")) config.boosted.rounds = boosted.at("rounds").get<int>();
        if (boosted.contains("learning_rate"))
            config.boosted.learning_rate = boosted.at("learning_rate").get<double>();
        if (boosted.contains("max_depth"))
            config.boosted.max_depth = boosted.at("max_depth").get<int>();
        if (boosted.contains("min_samples_leaf"))
            config.boosted.min_samples_leaf = boosted.at("min_samples_leaf").get<int>();
        if (boosted.contains("lambda")) config.boosted.lambda = boosted.at("lambda").get<double>();
        if (boosted.contains("gamma")) config.boosted.gamma = boosted.at("gamma").get<double>();
    }

    if (j.contains("logistic")) {
        const auto& logistic = j.at("logistic");
        detail::require_keys(logistic, {"l2", "epochs", "learning_rate"}, "logistic");
        if (logistic.contains("l2")) config.logistic.l2 = logistic.at("l2").get<double>();
        if (logistic.contains("epochs")) config.logistic.epochs = logistic.at("epochs").get<int>();
        if (logistic.contains("learning_rate"))
            config.logistic.learning_rate = logistic.at("learning_rate").get<double>();
    }

    if (j.contains("isolation")) {
        const auto& isolation = j.at("isolation");
        detail::require_keys(isolation, {"n_trees", "subsample"}, "isolation");
        if (isolation.contains("n_trees"))
            config.isolation.n_trees = isolation.at("n_trees").get<int>();
        if (isolation.contains("subsample"))
            config.isolation.subsample = isolation.at("subsample").get<int>();
    }

    // Range checks that do not depend on the data.
    if (config.windows.empty()) throw ConfigError("windows must list at least one window length");
    if (config.horizons.empty()) throw ConfigError("horizons must list at least one horizon");
    for (std::int64_t w : config.windows)
        if (w < 2) throw ConfigError("windows entries must be >= 2");
    for (std::int64_t h : config.horizons)
        if (h < 1) throw ConfigError("horizons entries must be >= 1");
    if (config.stride < 1) throw ConfigError("stride must be >= 1");
    if (!(config.split.train_fraction > 0.0 && config.split.train_fraction < 1.0))
        throw ConfigError("split.train_fraction must lie strictly between 0 and 1");
    if (!(config.thresholds.percentile > 0.0 && config.thresholds.percentile < 1.0))
        throw ConfigError("thresholds.percentile must lie strictly between 0 and 1");
    if (config.features.stats.empty() || config.features.sensors.empty())
        throw ConfigError("features must keep at least one stat and one sensor");
    if (config.data.source == DataSource::Csv && config.data.csv_path.empty())
        throw ConfigError("data.csv_path is required when data.source is 'csv'");
    if (config.data.max_gap < 0) throw ConfigError("data.max_gap must be >= 0");
    if (config.eval.bootstrap_resamples < 1)
        throw ConfigError("eval.bootstrap_resamples must be >= 1");
    return config;
}

// Fully resolved echo: every key present with its effective value, so
// `--print-config` and run records are self-contained.
inline nlohmann::json config_to_json(const PipelineConfig& config) {
    nlohmann::json j;
    j["seed"] = config.seed;
    j["output_dir"] = config.output_dir;

    nlohmann::json sensors;
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        const auto& sensor = config.data.synthetic.sensors[s];
        sensors[kSensorNames[s]] = {{"baseline", sensor.baseline},
                                    {"noise_std", sensor.noise_std},
                                    {"seasonal_period", sensor.seasonal_period},
                                    {"seasonal_amplitude", sensor.seasonal_amplitude}};
    }
    nlohmann::json episodes = nlohmann::json::array();
    for (const auto& episode : config.data.synthetic.episodes) {
        nlohmann::json names = nlohmann::json::array();
        for (SensorId sensor : episode.sensors) names.push_back(sensor_name(sensor));
        episodes.push_back({{"start_minute", episode.start_minute},
                            {"ramp_minutes", episode.ramp_minutes},
                            {"duration_minutes", episode.duration_minutes},
                            {"severity", episode.severity},
                            {"sensors", std::move(names)}});
    }
    j["data"] = {{"source", config.data.source == DataSource::Csv ? "csv" : "synthetic"},
                 {"csv_path", config.data.csv_path},
                 {"max_gap", config.data.max_gap},
                 {"synthetic",
                  {{"duration_minutes", config.data.synthetic.duration_minutes},
                   {"sensors", std::move(sensors)},
                   {"episodes", std::move(episodes)}}}};

    const char* mode = config.thresholds.mode == ThresholdMode::Defaults      ? "defaults"
                       : config.thresholds.mode == ThresholdMode::Percentile ? "percentile"
                                                                             : "explicit";
    nlohmann::json values;
    for (std::size_t s = 0; s < kSensorCount; ++s)
        values[kSensorNames[s]] = {
            {"fixed", config.thresholds.explicit_values.sensors[s].fixed_limit},
            {"adaptive", config.thresholds.explicit_values.sensors[s].adaptive_limit}};
    j["thresholds"] = {{"mode", mode},
                       {"percentile", config.thresholds.percentile},
                       {"scope", config.thresholds.scope == ThresholdScope::TrainPrefix
                                     ? "train_prefix"
                                     : "full_series"},
                       {"values", std::move(values)}};

    j["windows"] = config.windows;
    j["horizons"] = config.horizons;
    j["stride"] = config.stride;

    nlohmann::json stats = nlohmann::json::array();
    for (StatKind stat : config.features.stats) stats.push_back(stat_name(stat));
    nlohmann::json feature_sensors = nlohmann::json::array();
    for (SensorId sensor : config.features.sensors) feature_sensors.push_back(sensor_name(sensor));
    j["features"] = {{"stats", std::move(stats)},
                     {"sensors", std::move(feature_sensors)},
                     {"exclude_abnormal_history", config.features.exclude_abnormal_history}};

    j["smote"] = {{"enabled", config.smote.enabled},
                  {"k_neighbors", config.smote.k_neighbors},
                  {"target_ratio", config.smote.target_ratio},
                  {"standardize", config.smote.standardize}};
    j["split"] = {{"train_fraction", config.split.train_fraction},
                  {"mode",
                   config.split.mode == SplitMode::Chronological ? "chronological" : "shuffled"},
                  {"purge_gap", config.split.purge_gap}};
    j["eval"] = {{"bootstrap_resamples", config.eval.bootstrap_resamples}};

    nlohmann::json models = nlohmann::json::array();
    for (ModelKind kind : config.models) models.push_back(model_name(kind));
    j["models"] = std::move(models);
    nlohmann::json baselines = nlohmann::json::array();
    for (BaselineKind kind : config.baselines) baselines.push_back(baseline_name(kind));
    j["baselines"] = std::move(baselines);

    j["forest"] = {{"n_trees", config.forest.n_trees},
                   {"max_depth", config.forest.max_depth},
                   {"min_samples_leaf", config.forest.min_samples_leaf},
                   {"features_per_split", config.forest.features_per_split},
                   {"bootstrap", config.forest.bootstrap}};
    j["boosted"] = {{"rounds", config.boosted.rounds},
                    {"learning_rate", config.boosted.learning_rate},
                    {"max_depth", config.boosted.max_depth},
                    {"min_samples_leaf", config.boosted.min_samples_leaf},
                    {"lambda", config.boosted.lambda},
                    {"gamma", config.boosted.gamma}};
    j["logistic"] = {{"l2", config.logistic.l2},
                     {"epochs", config.logistic.epochs},
                     {"learning_rate", config.logistic.learning_rate}};
    j["isolation"] = {{"n_trees", config.isolation.n_trees},
                      {"subsample", config.isolation.subsample}};
    return j;
}

inline PipelineConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

}  // namespace pumpcast
