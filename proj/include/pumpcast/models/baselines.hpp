#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/labeling.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/models/isolation.hpp"
#include "pumpcast/models/linear.hpp"
#include "pumpcast/telemetry.hpp"

namespace pumpcast {

enum class BaselineKind {
    FixedRule,
    AdaptiveRule,
    Persistence,
    Majority,
    LogisticRegression,
    IsolationForest,
};

inline constexpr BaselineKind kAllBaselines[] = {
    BaselineKind::FixedRule,       BaselineKind::AdaptiveRule,
    BaselineKind::Persistence,     BaselineKind::Majority,
    BaselineKind::LogisticRegression, BaselineKind::IsolationForest,
};

inline const char* baseline_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::FixedRule: return "fixed_rule";
        case BaselineKind::AdaptiveRule: return "adaptive_rule";
        case BaselineKind::Persistence: return "persistence";
        case BaselineKind::Majority: return "majority";
        case BaselineKind::LogisticRegression: return "logistic";
        case BaselineKind::IsolationForest: return "isolation";
    }
    return "unknown";
}

inline std::optional<BaselineKind> baseline_from_name(std::string_view name) {
    for (BaselineKind kind : kAllBaselines)
        if (name == baseline_name(kind)) return kind;
    return std::nullopt;
}

struct BaselineModel {
    BaselineKind kind = BaselineKind::Majority;
    // FixedRule / AdaptiveRule
    std::optional<ThresholdSet> thresholds;
    // LogisticRegression
    std::optional<LogisticModel> logistic;
    // IsolationForest
    std::optional<IsolationModel> isolation;
};

// Raw-series context the rule and persistence variants read at predict time.
// Feature-vector variants ignore it.
struct PredictContext {
    const LabeledSeries* labeled = nullptr;
};

// `dataset` is only consulted by the trainable variants. The isolation forest
// expects the un-rebalanced training split: its threshold calibration assumes
// the raw class ratio, and synthetic minority rows would distort it.
inline BaselineModel train_baseline(BaselineKind kind, const LabeledDataset& dataset,
                                    const ThresholdSet& thresholds,
                                    const LogisticConfig& logistic_config = {},
                                    const IsolationConfig& isolation_config = {}) {
    BaselineModel model;
    model.kind = kind;
    switch (kind) {
        case BaselineKind::FixedRule:
        case BaselineKind::AdaptiveRule:
            if (!thresholds.complete())
                throw IncompleteThresholds("rule baseline needs limits for all five sensors");
            model.thresholds = thresholds;
            break;
        case BaselineKind::Persistence:
        case BaselineKind::Majority:
            break;  // nothing to fit
        case BaselineKind::LogisticRegression:
            model.logistic = train_logistic(dataset, logistic_config);
            break;
        case BaselineKind::IsolationForest:
            model.isolation = train_isolation(dataset, isolation_config);
            break;
    }
    return model;
}

namespace detail {

inline const TelemetryRecord& anchor_record(const Sample& sample, const PredictContext& context,
                                            const char* who) {
    if (!context.labeled)
        throw MissingInput(std::string(who) + " baseline needs the labeled series context");
    if (!sample.anchor_minute)
        throw MissingInput(std::string(who) + " baseline needs a sample with an anchor timestamp");
    const auto idx = context.labeled->series.index_of(*sample.anchor_minute);
    if (!idx)
        throw MissingInput(std::string(who) + " baseline: anchor timestamp not found in series");
    return context.labeled->series.records[*idx];
}

// Largest value-to-limit ratio across sensors, squashed to (0,1) so baseline
// scores are rankable for AUROC. r = 1 (value at the limit) maps to 0.5.
inline double rule_score(const TelemetryRecord& record, const ThresholdSet& thresholds,
                         bool fixed) {
    double worst = 0.0;
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        const double limit =
            fixed ? thresholds.sensors[s].fixed_limit : thresholds.sensors[s].adaptive_limit;
        worst = std::max(worst, record.values[s] / limit);
    }
    worst = std::max(worst, 0.0);
    return worst / (1.0 + worst);
}

inline bool rule_exceeds(const TelemetryRecord& record, const ThresholdSet& thresholds,
                         bool fixed) {
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        const double limit =
            fixed ? thresholds.sensors[s].fixed_limit : thresholds.sensors[s].adaptive_limit;
        if (record.values[s] > limit) return true;
    }
    return false;
}

}  // namespace detail

inline Prediction predict(const BaselineModel& model, const Sample& sample,
                          const PredictContext& context = {}) {
    Prediction out;
    switch (model.kind) {
        case BaselineKind::FixedRule:
        case BaselineKind::AdaptiveRule: {
            const bool fixed = model.kind == BaselineKind::FixedRule;
            const auto& record = detail::anchor_record(sample, context, baseline_name(model.kind));
            out.label = detail::rule_exceeds(record, *model.thresholds, fixed)
                            ? BinaryLabel::Positive
                            : BinaryLabel::Negative;
            out.score = detail::rule_score(record, *model.thresholds, fixed);
            break;
        }
        case BaselineKind::Persistence: {
            if (!context.labeled)
                throw MissingInput("persistence baseline needs the labeled series context");
            if (!sample.anchor_minute)
                throw MissingInput("persistence baseline needs a sample with an anchor timestamp");
            const auto idx = context.labeled->series.index_of(*sample.anchor_minute);
            if (!idx)
                throw MissingInput("persistence baseline: anchor timestamp not found in series");
            out.label = binarize(context.labeled->overall[*idx]);
            out.score = out.label == BinaryLabel::Positive ? 1.0 : 0.0;
            break;
        }
        case BaselineKind::Majority:
            out.label = BinaryLabel::Negative;
            out.score = 0.0;
            break;
        case BaselineKind::LogisticRegression:
            if (!model.logistic) throw MissingInput("logistic baseline was not trained");
            out = predict(*model.logistic, sample.features);
            break;
        case BaselineKind::IsolationForest:
            if (!model.isolation) throw MissingInput("isolation baseline was not trained");
            out = predict(*model.isolation, sample.features);
            break;
    }
    return out;
}

}  // namespace pumpcast
