#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/textio.hpp"

namespace pumpcast {

// ---------------------------------------------------------------------------
// The five monitored pump signals, in canonical column order.
// ---------------------------------------------------------------------------

enum class SensorId : std::uint8_t { Vibration = 0, Temperature, Flow, Pressure, Current };

inline constexpr std::size_t kSensorCount = 5;

inline constexpr std::array<SensorId, kSensorCount> kAllSensors = {
    SensorId::Vibration, SensorId::Temperature, SensorId::Flow, SensorId::Pressure,
    SensorId::Current};

inline constexpr std::array<const char*, kSensorCount> kSensorNames = {
    "vibration", "temperature", "flow", "pressure", "current"};

inline constexpr std::array<const char*, kSensorCount> kSensorUnits = {"mm/s", "degC", "m3/h",
                                                                       "bar", "A"};

inline const char* sensor_name(SensorId s) { return kSensorNames[static_cast<std::size_t>(s)]; }

inline std::optional<SensorId> sensor_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kSensorCount; ++i)
        if (name == kSensorNames[i]) return kAllSensors[i];
    return std::nullopt;
}

// One reading per sensor at one UTC minute.
struct TelemetryRecord {
    std::int64_t minute = 0;  // minutes since Unix epoch
    std::array<double, kSensorCount> values{};

    double value(SensorId s) const { return values[static_cast<std::size_t>(s)]; }
    bool operator==(const TelemetryRecord&) const = default;
};

// Ordered record stream at a fixed one-minute cadence. Timestamps strictly
// increase; after repair_gaps consecutive records are exactly one minute apart.
struct TelemetrySeries {
    std::vector<TelemetryRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    bool strictly_increasing() const {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (records[i].minute <= records[i - 1].minute) return false;
        return true;
    }

    bool contiguous() const {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (records[i].minute != records[i - 1].minute + 1) return false;
        return true;
    }

    // Index of the record at the given minute, if present.
    std::optional<std::size_t> index_of(std::int64_t minute) const {
        std::size_t lo = 0, hi = records.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (records[mid].minute < minute)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < records.size() && records[lo].minute == minute) return lo;
        return std::nullopt;
    }

    bool operator==(const TelemetrySeries&) const = default;
};

inline constexpr const char* kTelemetryHeader =
    "timestamp,vibration,temperature,flow,pressure,current";

// ---------------------------------------------------------------------------
// CSV ingest / export
// ---------------------------------------------------------------------------

struct IngestResult {
    TelemetrySeries series;
    std::size_t dropped_rows = 0;      // unparseable or non-finite rows
    std::size_t duplicate_rows = 0;    // earlier occurrences of repeated timestamps
};

// Parses the canonical telemetry CSV. Bad rows are dropped and counted, rows
// are sorted by timestamp and duplicate timestamps collapse to the last
// occurrence in file order.
inline IngestResult ingest_csv_text(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kTelemetryHeader)
        throw MissingColumn("telemetry header must be exactly '" +
                            std::string(kTelemetryHeader) + "'");

    IngestResult result;
    std::vector<std::pair<TelemetryRecord, std::size_t>> rows;  // (record, file order)
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto line = lines[li];
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != kSensorCount + 1) {
            ++result.dropped_rows;
            continue;
        }
        const auto minute = parse_minute(fields[0]);
        if (!minute) {
            ++result.dropped_rows;
            continue;
        }
        TelemetryRecord rec;
        rec.minute = *minute;
        bool ok = true;
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            const auto v = parse_double(fields[s + 1]);
            if (!v || !std::isfinite(*v)) {
                ok = false;
                break;
            }
            rec.values[s] = *v;
        }
        if (!ok) {
            ++result.dropped_rows;
            continue;
        }
        rows.emplace_back(rec, rows.size());
    }
    if (rows.empty()) throw EmptyAfterCleaning("no valid telemetry rows after cleaning");

    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.first.minute < b.first.minute;
    });

    // Last occurrence wins for duplicate timestamps (logger overwrite semantics).
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i + 1 < rows.size() && rows[i + 1].first.minute == rows[i].first.minute) {
            ++result.duplicate_rows;
            continue;
        }
        result.series.records.push_back(rows[i].first);
    }
    if (!result.series.strictly_increasing())
        throw NonMonotonicAfterSort("timestamps not strictly increasing after sort");
    return result;
}

inline IngestResult ingest_csv(const std::string& path) { return ingest_csv_text(read_file(path)); }

inline std::string to_csv(const TelemetrySeries& series) {
    std::string out(kTelemetryHeader);
    out.push_back('\n');
    for (const auto& rec : series.records) {
        out += format_minute(rec.minute);
        for (double v : rec.values) {
            out.push_back(',');
            out += format_double(v);
        }
        out.push_back('\n');
    }
    return out;
}

inline void write_csv(const TelemetrySeries& series, const std::string& path) {
    write_file(path, to_csv(series));
}

// ---------------------------------------------------------------------------
// Gap repair
// ---------------------------------------------------------------------------

struct DiscardedSpan {
    std::int64_t start_minute = 0;
    std::int64_t end_minute = 0;  // inclusive
    std::size_t record_count = 0;
};

struct RepairResult {
    TelemetrySeries series;
    std::size_t filled_records = 0;
    std::vector<DiscardedSpan> discarded;
};

// Fills gaps of up to max_gap missing minutes by per-sensor linear
// interpolation. Larger gaps split the series; the longest contiguous segment
// wins (ties go to the earliest) and the rest are reported as discarded.
inline RepairResult repair_gaps(const TelemetrySeries& series, std::int64_t max_gap = 5) {
    if (series.empty()) throw SeriesTooShort("repair_gaps requires a non-empty series");
    if (max_gap < 0) throw ConfigError("max_gap must be non-negative");

    // Segment boundaries: gaps wider than max_gap.
    std::vector<std::pair<std::size_t, std::size_t>> segments;  // [first, last] indices
    std::size_t seg_start = 0;
    for (std::size_t i = 1; i < series.records.size(); ++i) {
        const std::int64_t missing = series.records[i].minute - series.records[i - 1].minute - 1;
        if (missing > max_gap) {
            segments.emplace_back(seg_start, i - 1);
            seg_start = i;
        }
    }
    segments.emplace_back(seg_start, series.records.size() - 1);

    std::size_t best = 0;
    auto seg_len = [&](std::size_t k) {
        return series.records[segments[k].second].minute -
               series.records[segments[k].first].minute + 1;
    };
    for (std::size_t k = 1; k < segments.size(); ++k)
        if (seg_len(k) > seg_len(best)) best = k;

    RepairResult result;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (k == best) continue;
        result.discarded.push_back({series.records[segments[k].first].minute,
                                    series.records[segments[k].second].minute,
                                    segments[k].second - segments[k].first + 1});
    }

    const auto [first, last] = segments[best];
    for (std::size_t i = first; i <= last; ++i) {
        result.series.records.push_back(series.records[i]);
        if (i == last) break;
        const auto& a = series.records[i];
        const auto& b = series.records[i + 1];
        const std::int64_t missing = b.minute - a.minute - 1;
        for (std::int64_t m = 1; m <= missing; ++m) {
            TelemetryRecord rec;
            rec.minute = a.minute + m;
            const double frac =
                static_cast<double>(m) / static_cast<double>(missing + 1);
            for (std::size_t s = 0; s < kSensorCount; ++s)
                rec.values[s] = a.values[s] + frac * (b.values[s] - a.values[s]);
            result.series.records.push_back(rec);
            ++result.filled_records;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic telemetry. The real plant data is not redistributable, so this
// generator produces seasonal noisy baselines with injected degradation
// episodes for smoke and end-to-end testing.
// ---------------------------------------------------------------------------

struct SensorProfile {
    double baseline = 0.0;
    double noise_std = 0.0;
    double seasonal_period = 1440.0;  // minutes
    double seasonal_amplitude = 0.0;
};

// One degradation episode: the affected sensors' signal is scaled by a
// multiplier that ramps linearly from 1 to `severity` over ramp_minutes and
// holds until the episode ends.
struct FaultEpisode {
    std::int64_t start_minute = 0;  // offset from series start
    std::int64_t ramp_minutes = 1;
    std::int64_t duration_minutes = 1;  // total episode length, >= ramp
    double severity = 1.0;
    std::vector<SensorId> sensors;
};

struct SyntheticProfile {
    std::int64_t duration_minutes = 0;
    std::array<SensorProfile, kSensorCount> sensors{};
    std::vector<FaultEpisode> episodes;
    std::uint64_t seed = 0;

    // Canonical maxima of the pipeline: window 120 + horizon 30.
    static constexpr std::int64_t kMinDuration = 150;
};

// First minute of generated series: 2024-01-01T00:00 UTC.
inline constexpr std::int64_t kSyntheticStartMinute = 19723 * 1440;

inline void validate_profile(const SyntheticProfile& profile) {
    if (profile.duration_minutes < SyntheticProfile::kMinDuration)
        throw InvalidProfile("duration_minutes must be at least " +
                             std::to_string(SyntheticProfile::kMinDuration));
    for (const auto& sp : profile.sensors) {
        if (!(sp.noise_std >= 0.0)) throw InvalidProfile("noise_std must be >= 0");
        if (!(sp.seasonal_period > 0.0)) throw InvalidProfile("seasonal_period must be > 0");
        if (!(sp.seasonal_amplitude >= 0.0))
            throw InvalidProfile("seasonal_amplitude must be >= 0");
        if (!std::isfinite(sp.baseline)) throw InvalidProfile("baseline must be finite");
    }
    for (const auto& ep : profile.episodes) {
        if (ep.start_minute < 0 || ep.start_minute + ep.duration_minutes > profile.duration_minutes)
            throw InvalidProfile("episode must lie inside the series");
        if (ep.ramp_minutes < 1 || ep.ramp_minutes > ep.duration_minutes)
            throw InvalidProfile("ramp_minutes must be in [1, duration_minutes]");
        if (!(ep.severity >= 1.0)) throw InvalidProfile("severity must be >= 1");
        if (ep.sensors.empty()) throw InvalidProfile("episode must affect at least one sensor");
    }
    // Overlapping episodes on the same sensor would make the multiplier ambiguous.
    for (std::size_t i = 0; i < profile.episodes.size(); ++i) {
        for (std::size_t j = i + 1; j < profile.episodes.size(); ++j) {
            const auto& a = profile.episodes[i];
            const auto& b = profile.episodes[j];
            const bool time_overlap = a.start_minute < b.start_minute + b.duration_minutes &&
                                      b.start_minute < a.start_minute + a.duration_minutes;
            if (!time_overlap) continue;
            for (SensorId s : a.sensors)
                for (SensorId s2 : b.sensors)
                    if (s == s2)
                        throw InvalidProfile("episodes overlap on sensor " +
                                             std::string(sensor_name(s)));
        }
    }
}

inline TelemetrySeries generate_synthetic(const SyntheticProfile& profile) {
    validate_profile(profile);
    Rng rng(derive_seed(profile.seed, hash_name("telemetry.synthetic")));
    TelemetrySeries series;
    series.records.reserve(static_cast<std::size_t>(profile.duration_minutes));
    for (std::int64_t t = 0; t < profile.duration_minutes; ++t) {
        TelemetryRecord rec;
        rec.minute = kSyntheticStartMinute + t;
        for (std::size_t s = 0; s < kSensorCount; ++s) {
            const auto& sp = profile.sensors[s];
            double v = sp.baseline +
                       sp.seasonal_amplitude *
                           std::sin(2.0 * M_PI * static_cast<double>(t) / sp.seasonal_period) +
                       rng.gaussian() * sp.noise_std;
            for (const auto& ep : profile.episodes) {
                if (t < ep.start_minute || t >= ep.start_minute + ep.duration_minutes) continue;
                bool affected = false;
                for (SensorId id : ep.sensors)
                    if (static_cast<std::size_t>(id) == s) affected = true;
                if (!affected) continue;
                const double phase = static_cast<double>(t - ep.start_minute + 1);
                const double ramp =
                    std::min(1.0, phase / static_cast<double>(ep.ramp_minutes));
                v *= 1.0 + (ep.severity - 1.0) * ramp;
            }
            rec.values[s] = v;
        }
        series.records.push_back(rec);
    }
    return series;
}

}  // namespace pumpcast
