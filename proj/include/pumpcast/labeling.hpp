#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/stats.hpp"
#include "pumpcast/telemetry.hpp"

namespace pumpcast {

// ---------------------------------------------------------------------------
// Condition labels, ordered by severity.
// ---------------------------------------------------------------------------

enum class ConditionLabel : std::uint8_t { Normal = 0, EarlyWarning = 1, CriticalAlert = 2 };

enum class BinaryLabel : std::uint8_t { Negative = 0, Positive = 1 };

inline const char* condition_name(ConditionLabel label) {
    switch (label) {
        case ConditionLabel::Normal: return "Normal";
        case ConditionLabel::EarlyWarning: return "EarlyWarning";
        case ConditionLabel::CriticalAlert: return "CriticalAlert";
    }
    return "?";
}

inline std::optional<ConditionLabel> condition_from_name(std::string_view name) {
    if (name == "Normal") return ConditionLabel::Normal;
    if (name == "EarlyWarning") return ConditionLabel::EarlyWarning;
    if (name == "CriticalAlert") return ConditionLabel::CriticalAlert;
    return std::nullopt;
}

// The forecasting task is binary: anything above Normal counts as a positive.
// Three-class labels stay available on the labeled series for inspection.
inline BinaryLabel binarize(ConditionLabel label) {
    return label == ConditionLabel::Normal ? BinaryLabel::Negative : BinaryLabel::Positive;
}

// ---------------------------------------------------------------------------
// Dual thresholds: a fixed engineering limit plus an adaptive (historical
// percentile) limit per sensor.
// ---------------------------------------------------------------------------

struct SensorThresholds {
    double fixed_limit = 0.0;
    double adaptive_limit = 0.0;
};

struct ThresholdSet {
    std::array<SensorThresholds, kSensorCount> sensors{};

    const SensorThresholds& at(SensorId s) const {
        return sensors[static_cast<std::size_t>(s)];
    }
    SensorThresholds& at(SensorId s) { return sensors[static_cast<std::size_t>(s)]; }

    bool complete() const {
        for (const auto& t : sensors)
            if (!std::isfinite(t.fixed_limit) || !std::isfinite(t.adaptive_limit)) return false;
        return true;
    }

    // Built-in per-sensor limits: datasheet engineering limits and reference
    // adaptive values for the monitored pump class.
    static ThresholdSet defaults() {
        ThresholdSet set;
        constexpr std::array<double, kSensorCount> fixed = {5.00, 80.00, 2800.00, 6.00, 240.00};
        constexpr std::array<double, kSensorCount> adaptive = {1.65, 55.23, 2668.05, 4.77,
                                                               231.89};
        for (std::size_t s = 0; s < kSensorCount; ++s)
            set.sensors[s] = {fixed[s], adaptive[s]};
        return set;
    }
};

// Per-sensor empirical percentile of the series' historical values.
// Requires at least 20 records for the order statistics to mean anything.
inline std::array<double, kSensorCount> compute_adaptive_thresholds(const TelemetrySeries& series,
                                                                   double percentile) {
    if (series.size() < 20)
        throw SeriesTooShort("adaptive thresholds need at least 20 records");
    if (!(percentile > 0.0 && percentile < 1.0))
        throw ConfigError("percentile must lie strictly between 0 and 1");
    std::array<double, kSensorCount> out{};
    std::vector<double> column(series.size());
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        for (std::size_t i = 0; i < series.size(); ++i)
            column[i] = series.records[i].values[s];
        out[s] = percentile_interpolated(column, percentile);
    }
    return out;
}

struct ThresholdBuildResult {
    ThresholdSet set;
    std::vector<SensorId> clamped;  // sensors whose adaptive limit was pulled down to fixed
};

// Combines fixed and adaptive limits. An adaptive limit above the fixed limit
// would invert the warning band, so it is clamped to the fixed limit and the
// sensor reported.
inline ThresholdBuildResult make_thresholds(const std::array<double, kSensorCount>& fixed,
                                            const std::array<double, kSensorCount>& adaptive) {
    ThresholdBuildResult result;
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        double adapt = adaptive[s];
        if (adapt > fixed[s]) {
            adapt = fixed[s];
            result.clamped.push_back(kAllSensors[s]);
        }
        result.set.sensors[s] = {fixed[s], adapt};
    }
    return result;
}

// ---------------------------------------------------------------------------
// Labeling rule. Strict inequalities at both limits: a value exactly on a
// threshold stays in the lower band.
// ---------------------------------------------------------------------------

inline ConditionLabel label_value(double value, const ThresholdSet& thresholds, SensorId sensor) {
    const auto& t = thresholds.at(sensor);
    if (value > t.fixed_limit) return ConditionLabel::CriticalAlert;
    if (value > t.adaptive_limit) return ConditionLabel::EarlyWarning;
    return ConditionLabel::Normal;
}

struct LabeledSeries {
    TelemetrySeries series;
    std::vector<std::array<ConditionLabel, kSensorCount>> sensor_labels;
    std::vector<ConditionLabel> overall;  // max severity across sensors per record

    std::size_t size() const { return series.size(); }
};

inline LabeledSeries label_series(const TelemetrySeries& series, const ThresholdSet& thresholds) {
    if (!thresholds.complete())
        throw IncompleteThresholds("threshold set must cover all five sensors with finite limits");
    LabeledSeries out;
    out.series = series;
    out.sensor_labels.reserve(series.size());
    out.overall.reserve(series.size());
    for (const auto& rec : series.records) {
        std::array<ConditionLabel, kSensorCount> labels{};
        ConditionLabel worst = ConditionLabel::Normal;
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            labels[s] = label_value(rec.values[s], thresholds, kAllSensors[s]);
            if (labels[s] > worst) worst = labels[s];
        }
        out.sensor_labels.push_back(labels);
        out.overall.push_back(worst);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labeled-series CSV: telemetry columns plus per-sensor and overall labels.
// ---------------------------------------------------------------------------

inline std::string labeled_series_to_csv(const LabeledSeries& labeled) {
    std::string out(kTelemetryHeader);
    for (const char* name : kSensorNames) {
        out.push_back(',');
        out += name;
        out += "_label";
    }
    out += ",overall_label\n";
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const auto& rec = labeled.series.records[i];
        out += format_minute(rec.minute);
        for (double v : rec.values) {
            out.push_back(',');
            out += format_double(v);
        }
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            out.push_back(',');
            out += condition_name(labeled.sensor_labels[i][s]);
        }
        out.push_back(',');
        out += condition_name(labeled.overall[i]);
        out.push_back('\n');
    }
    return out;
}

inline LabeledSeries labeled_series_from_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw DataError("empty labeled-series file");
    std::string expected(kTelemetryHeader);
    for (const char* name : kSensorNames) {
        expected.push_back(',');
        expected += name;
        expected += "_label";
    }
    expected += ",overall_label";
    if (lines[0] != expected)
        throw MissingColumn("labeled-series header mismatch");

    LabeledSeries out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != 1 + 2 * kSensorCount + 1)
            throw DataError("labeled-series row has wrong field count");
        TelemetryRecord rec;
        const auto minute = parse_minute(fields[0]);
        if (!minute) throw DataError("bad timestamp in labeled-series row");
        rec.minute = *minute;
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            const auto v = parse_double(fields[1 + s]);
            if (!v || !std::isfinite(*v)) throw DataError("bad value in labeled-series row");
            rec.values[s] = *v;
        }
        std::array<ConditionLabel, kSensorCount> labels{};
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            const auto lab = condition_from_name(fields[1 + kSensorCount + s]);
            if (!lab) throw DataError("bad sensor label in labeled-series row");
            labels[s] = *lab;
        }
        const auto overall = condition_from_name(fields[1 + 2 * kSensorCount]);
        if (!overall) throw DataError("bad overall label in labeled-series row");
        out.series.records.push_back(rec);
        out.sensor_labels.push_back(labels);
        out.overall.push_back(*overall);
    }
    if (out.size() == 0) throw EmptyAfterCleaning("no rows in labeled-series file");
    return out;
}

}  // namespace pumpcast
