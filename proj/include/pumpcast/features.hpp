#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/labeling.hpp"

namespace pumpcast {

// ---------------------------------------------------------------------------
// Sliding-window statistics. A window of L trailing minutes ends at an anchor
// record and predicts the condition `horizon` minutes past the anchor.
// ---------------------------------------------------------------------------

struct WindowConfig {
    std::int64_t window_length = 60;  // L, minutes
    std::int64_t horizon = 5;         // forecast offset, minutes
    std::int64_t stride = 1;

    void validate() const {
        if (window_length < 2) throw ConfigError("window_length must be >= 2");
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (stride < 1) throw ConfigError("stride must be >= 1");
    }
};

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;  // population form (divide by L)
    double min = 0.0;
    double max = 0.0;
    double trend = 0.0;  // OLS slope against the minute index 0..L-1
};

inline WindowStats window_stats(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw DegenerateWindow("window needs at least 2 values");

    WindowStats out;
    double sum = 0.0;
    out.min = values[0];
    out.max = values[0];
    for (double v : values) {
        sum += v;
        out.min = std::min(out.min, v);
        out.max = std::max(out.max, v);
    }
    const double nn = static_cast<double>(n);
    out.mean = sum / nn;

    double var_acc = 0.0;
    double cov_acc = 0.0;
    const double t_mean = (nn - 1.0) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dv = values[i] - out.mean;
        var_acc += dv * dv;
        cov_acc += (static_cast<double>(i) - t_mean) * dv;
    }
    out.stddev = std::sqrt(var_acc / nn);
    // sum over i of (i - t_mean)^2 has the closed form n(n^2-1)/12
    out.trend = cov_acc / (nn * (nn * nn - 1.0) / 12.0);
    return out;
}

// ---------------------------------------------------------------------------
// Feature layout: sensor-major, stat-minor. The full grid is 5 sensors x
// 5 stats = 25 features; ablations may restrict either axis.
// ---------------------------------------------------------------------------

enum class StatKind : std::uint8_t { Mean = 0, Std, Min, Max, Trend };

inline constexpr std::array<StatKind, 5> kAllStats = {StatKind::Mean, StatKind::Std, StatKind::Min,
                                                      StatKind::Max, StatKind::Trend};

inline const char* stat_name(StatKind k) {
    switch (k) {
        case StatKind::Mean: return "mean";
        case StatKind::Std: return "std";
        case StatKind::Min: return "min";
        case StatKind::Max: return "max";
        case StatKind::Trend: return "trend";
    }
    return "?";
}

inline std::optional<StatKind> stat_from_name(std::string_view name) {
    for (StatKind k : kAllStats)
        if (name == stat_name(k)) return k;
    return std::nullopt;
}

struct FeatureSpec {
    std::vector<StatKind> stats{kAllStats.begin(), kAllStats.end()};
    std::vector<SensorId> sensors{kAllSensors.begin(), kAllSensors.end()};
    // Ablation switch: drop samples whose history window already contains a
    // non-Normal overall label.
    bool exclude_abnormal_history = false;

    std::size_t dimension() const { return stats.size() * sensors.size(); }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> names;
        names.reserve(dimension());
        for (SensorId s : sensors)
            for (StatKind k : stats)
                names.push_back(std::string(sensor_name(s)) + "_" + stat_name(k));
        return names;
    }

    void validate() const {
        if (stats.empty() || sensors.empty())
            throw ConfigError("feature spec needs at least one stat and one sensor");
    }
};

struct Sample {
    std::vector<double> features;
    BinaryLabel label = BinaryLabel::Negative;
    std::optional<std::int64_t> anchor_minute;  // absent for synthetic samples
    bool synthetic = false;
};

enum class SplitTag : std::uint8_t { Full = 0, Train, Test };

inline const char* split_tag_name(SplitTag t) {
    switch (t) {
        case SplitTag::Full: return "full";
        case SplitTag::Train: return "train";
        case SplitTag::Test: return "test";
    }
    return "?";
}

struct LabeledDataset {
    std::vector<Sample> samples;
    WindowConfig window;
    std::vector<std::string> feature_names;
    SplitTag tag = SplitTag::Full;

    std::size_t size() const { return samples.size(); }
    std::size_t dimension() const { return feature_names.size(); }

    std::size_t count(BinaryLabel label) const {
        std::size_t n = 0;
        for (const auto& s : samples) n += (s.label == label) ? 1 : 0;
        return n;
    }
};

// Builds supervised samples: for each anchor index i (window [i-L+1, i]),
// the features are per-sensor window stats and the target is the binarized
// overall label at i + horizon. Without exclusions the sample count is
// floor((N - L - horizon)/stride) + 1.
inline LabeledDataset build_dataset(const LabeledSeries& labeled, const WindowConfig& config,
                                    const FeatureSpec& spec = {}) {
    config.validate();
    spec.validate();
    const std::int64_t n = static_cast<std::int64_t>(labeled.size());
    const std::int64_t L = config.window_length;
    if (n < L + config.horizon)
        throw SeriesTooShort("series must span at least window_length + horizon records");

    LabeledDataset out;
    out.window = config;
    out.feature_names = spec.feature_names();

    std::vector<double> column(static_cast<std::size_t>(L));
    for (std::int64_t anchor = L - 1; anchor + config.horizon < n; anchor += config.stride) {
        if (spec.exclude_abnormal_history) {
            bool abnormal = false;
            for (std::int64_t i = anchor - L + 1; i <= anchor; ++i)
                if (labeled.overall[static_cast<std::size_t>(i)] != ConditionLabel::Normal) {
                    abnormal = true;
                    break;
                }
            if (abnormal) continue;
        }
        Sample sample;
        sample.features.reserve(out.feature_names.size());
        for (SensorId sensor : spec.sensors) {
            const std::size_t si = static_cast<std::size_t>(sensor);
            for (std::int64_t i = 0; i < L; ++i)
                column[static_cast<std::size_t>(i)] =
                    labeled.series.records[static_cast<std::size_t>(anchor - L + 1 + i)].values[si];
            const WindowStats stats = window_stats(column);
            for (StatKind k : spec.stats) {
                switch (k) {
                    case StatKind::Mean: sample.features.push_back(stats.mean); break;
                    case StatKind::Std: sample.features.push_back(stats.stddev); break;
                    case StatKind::Min: sample.features.push_back(stats.min); break;
                    case StatKind::Max: sample.features.push_back(stats.max); break;
                    case StatKind::Trend: sample.features.push_back(stats.trend); break;
                }
            }
        }
        sample.label =
            binarize(labeled.overall[static_cast<std::size_t>(anchor + config.horizon)]);
        sample.anchor_minute = labeled.series.records[static_cast<std::size_t>(anchor)].minute;
        out.samples.push_back(std::move(sample));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset CSV: one column per feature name, then `label` (0/1) and
// `anchor_ts` (ISO minute; empty for synthetic samples).
// ---------------------------------------------------------------------------

inline std::string dataset_to_csv(const LabeledDataset& dataset) {
    std::string out;
    for (const auto& name : dataset.feature_names) {
        out += name;
        out.push_back(',');
    }
    out += "label,anchor_ts\n";
    for (const auto& sample : dataset.samples) {
        for (double v : sample.features) {
            out += format_double(v);
            out.push_back(',');
        }
        out += sample.label == BinaryLabel::Positive ? "1" : "0";
        out.push_back(',');
        if (sample.anchor_minute) out += format_minute(*sample.anchor_minute);
        out.push_back('\n');
    }
    return out;
}

inline LabeledDataset dataset_from_csv(std::string_view text, const WindowConfig& config = {}) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw DataError("empty dataset file");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 3 || header[header.size() - 2] != "label" ||
        header.back() != "anchor_ts")
        throw MissingColumn("dataset header must end with label,anchor_ts");

    LabeledDataset out;
    out.window = config;
    for (std::size_t i = 0; i + 2 < header.size(); ++i)
        out.feature_names.emplace_back(header[i]);

    const std::size_t dim = out.feature_names.size();
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != dim + 2) throw DataError("dataset row has wrong field count");
        Sample sample;
        sample.features.reserve(dim);
        for (std::size_t f = 0; f < dim; ++f) {
            const auto v = parse_double(fields[f]);
            if (!v || !std::isfinite(*v)) throw DataError("bad feature value in dataset row");
            sample.features.push_back(*v);
        }
        if (fields[dim] == "1")
            sample.label = BinaryLabel::Positive;
        else if (fields[dim] == "0")
            sample.label = BinaryLabel::Negative;
        else
            throw DataError("dataset label must be 0 or 1");
        if (!fields[dim + 1].empty()) {
            const auto minute = parse_minute(fields[dim + 1]);
            if (!minute) throw DataError("bad anchor_ts in dataset row");
            sample.anchor_minute = *minute;
        } else {
            sample.synthetic = true;
        }
        out.samples.push_back(std::move(sample));
    }
    return out;
}

}  // namespace pumpcast
