#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/stats.hpp"

namespace pumpcast {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    std::optional<double> recall() const { return ratio(tp, tp + fn); }
    std::optional<double> precision() const { return ratio(tp, tp + fp); }
    std::optional<double> far() const { return ratio(fp, fp + tn); }
    std::optional<double> specificity() const { return ratio(tn, tn + fp); }

    std::optional<double> f1() const {
        const auto r = recall();
        const auto p = precision();
        if (!r || !p || *r + *p == 0.0) return std::nullopt;
        return 2.0 * *p * *r / (*p + *r);
    }

  private:
    static std::optional<double> ratio(std::size_t num, std::size_t den) {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    }
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// A metric is undefined when its denominator is zero (e.g. precision with no
// positive predictions); undefined metrics carry no CI.
struct MetricValue {
    std::optional<double> value;
    std::optional<ConfidenceInterval> ci;
};

struct MetricReport {
    MetricValue recall;
    MetricValue precision;
    MetricValue f1;
    MetricValue far;
    MetricValue auroc;
    std::size_t sample_count = 0;
};

enum class MetricKind { Recall, Precision, F1, Far, Auroc };

inline constexpr MetricKind kAllMetrics[] = {MetricKind::Recall, MetricKind::Precision,
                                             MetricKind::F1, MetricKind::Far, MetricKind::Auroc};

inline const char* metric_name(MetricKind kind) {
    switch (kind) {
        case MetricKind::Recall: return "recall";
        case MetricKind::Precision: return "precision";
        case MetricKind::F1: return "f1";
        case MetricKind::Far: return "far";
        case MetricKind::Auroc: return "auroc";
    }
    return "unknown";
}

struct SplitResult {
    LabeledDataset train;
    LabeledDataset test;
    // AUROC is meaningless on a one-class test side; flagged, not fatal.
    bool test_single_class = false;
};

namespace detail {

inline SplitResult finish_split(const LabeledDataset& dataset, std::vector<std::size_t> train_idx,
                                std::vector<std::size_t> test_idx) {
    SplitResult out;
    out.train.window = out.test.window = dataset.window;
    out.train.feature_names = out.test.feature_names = dataset.feature_names;
    out.train.tag = SplitTag::Train;
    out.test.tag = SplitTag::Test;
    out.train.samples.reserve(train_idx.size());
    out.test.samples.reserve(test_idx.size());
    for (std::size_t i : train_idx) out.train.samples.push_back(dataset.samples[i]);
    for (std::size_t i : test_idx) out.test.samples.push_back(dataset.samples[i]);
    const std::size_t test_pos = out.test.count(BinaryLabel::Positive);
    out.test_single_class = test_pos == 0 || test_pos == out.test.size();
    return out;
}

}  // namespace detail

// First ceil(train_fraction * n) samples train, the rest test. `purge_gap`
// additionally drops that many samples from the head of the test side so no
// test window overlaps a training target region; default 0 keeps every sample.
inline SplitResult split_chronological(const LabeledDataset& dataset, double train_fraction = 0.75,
                                       std::size_t purge_gap = 0) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    const std::size_t n = dataset.size();
    // The nudge absorbs representation error in train_fraction * n so the
    // result is the mathematical ceiling of the intended product.
    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
    if (n_train == 0 || n_train >= n)
        throw TooFewSamples("chronological split leaves an empty train or test side");

    std::vector<std::size_t> train_idx(n_train);
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    const std::size_t test_start = std::min(n, n_train + purge_gap);
    if (test_start >= n)
        throw TooFewSamples("purge gap consumed the entire test side");
    std::vector<std::size_t> test_idx(n - test_start);
    std::iota(test_idx.begin(), test_idx.end(), test_start);
    return detail::finish_split(dataset, std::move(train_idx), std::move(test_idx));
}

// Shuffled alternative to the chronological protocol. Overlapping windows leak
// across a shuffled boundary, so this is opt-in for comparison only.
inline SplitResult split_shuffled(const LabeledDataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    const std::size_t n = dataset.size();
    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
    if (n_train == 0 || n_train >= n)
        throw TooFewSamples("shuffled split leaves an empty train or test side");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, hash_name("eval.shuffle_split")));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::size_t> train_idx(order.begin(),
                                       order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                      order.end());
    // Chronological order within each side keeps artifacts readable.
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return detail::finish_split(dataset, std::move(train_idx), std::move(test_idx));
}

namespace detail {

// Mann-Whitney AUROC via average ranks. Ranks of tied groups are half-integer
// and all intermediate sums are exactly representable at these sizes, so the
// result is bit-identical to O(n^2) pair counting with half-weighted ties.
inline std::optional<double> auroc_ranked(const std::vector<Prediction>& predictions,
                                          const std::vector<BinaryLabel>& truths) {
    const std::size_t n = predictions.size();
    std::size_t n_pos = 0;
    for (BinaryLabel t : truths)
        if (t == BinaryLabel::Positive) ++n_pos;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return predictions[a].score < predictions[b].score;
    });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && predictions[order[j]].score == predictions[order[i]].score) ++j;
        // 1-based ranks i+1 .. j share the average rank.
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (truths[order[k]] == BinaryLabel::Positive) pos_rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

}  // namespace detail

struct EvalResult {
    ConfusionMatrix confusion;
    MetricReport metrics;
};

inline EvalResult compute_metrics(const std::vector<Prediction>& predictions,
                                  const std::vector<BinaryLabel>& truths) {
    if (predictions.size() != truths.size())
        throw LengthMismatch("predictions and truths differ in length");
    if (predictions.empty()) throw EmptyInput("cannot evaluate zero predictions");

    EvalResult out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool predicted_pos = predictions[i].label == BinaryLabel::Positive;
        const bool truly_pos = truths[i] == BinaryLabel::Positive;
        if (predicted_pos && truly_pos) ++out.confusion.tp;
        else if (predicted_pos) ++out.confusion.fp;
        else if (truly_pos) ++out.confusion.fn;
        else ++out.confusion.tn;
    }
    out.metrics.sample_count = predictions.size();
    out.metrics.recall.value = out.confusion.recall();
    out.metrics.precision.value = out.confusion.precision();
    out.metrics.f1.value = out.confusion.f1();
    out.metrics.far.value = out.confusion.far();
    out.metrics.auroc.value = detail::auroc_ranked(predictions, truths);
    return out;
}

inline std::optional<double> metric_of(const EvalResult& result, MetricKind kind) {
    switch (kind) {
        case MetricKind::Recall: return result.metrics.recall.value;
        case MetricKind::Precision: return result.metrics.precision.value;
        case MetricKind::F1: return result.metrics.f1.value;
        case MetricKind::Far: return result.metrics.far.value;
        case MetricKind::Auroc: return result.metrics.auroc.value;
    }
    return std::nullopt;
}

struct BootstrapResult {
    std::optional<ConfidenceInterval> ci;
    std::size_t undefined_resamples = 0;
};

struct BootstrapConfig {
    std::size_t n_resamples = 2000;
    std::uint64_t seed = 0;
};

// Percentile-method 95% CI. Each resample draws its own RNG stream from
// (seed, resample index), so any execution order gives identical output.
inline BootstrapResult bootstrap_ci(const std::vector<Prediction>& predictions,
                                    const std::vector<BinaryLabel>& truths, MetricKind kind,
                                    const BootstrapConfig& config = {}) {
    if (predictions.size() != truths.size())
        throw LengthMismatch("predictions and truths differ in length");
    if (predictions.size() < 10)
        throw TooFewSamples("bootstrap needs at least 10 samples");
    if (config.n_resamples == 0) throw ConfigError("bootstrap needs at least 1 resample");

    const std::size_t n = predictions.size();
    BootstrapResult out;
    std::vector<double> values;
    values.reserve(config.n_resamples);
    std::vector<Prediction> sample_preds(n);
    std::vector<BinaryLabel> sample_truths(n);
    for (std::size_t r = 0; r < config.n_resamples; ++r) {
        Rng rng(derive_seed(config.seed, hash_name("eval.bootstrap") ^ r));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = rng.uniform_index(n);
            sample_preds[i] = predictions[j];
            sample_truths[i] = truths[j];
        }
        const auto value = metric_of(compute_metrics(sample_preds, sample_truths), kind);
        if (value)
            values.push_back(*value);
        else
            ++out.undefined_resamples;
    }
    if (values.empty()) return out;
    out.ci = ConfidenceInterval{percentile_interpolated(values, 0.025),
                                percentile_interpolated(values, 0.975)};
    return out;
}

// Fills CIs for every defined metric on an existing point-estimate report.
inline void attach_bootstrap_cis(EvalResult& result, const std::vector<Prediction>& predictions,
                                 const std::vector<BinaryLabel>& truths,
                                 const BootstrapConfig& config = {}) {
    const auto fill = [&](MetricValue& metric, MetricKind kind) {
        if (!metric.value) return;
        metric.ci = bootstrap_ci(predictions, truths, kind, config).ci;
    };
    fill(result.metrics.recall, MetricKind::Recall);
    fill(result.metrics.precision, MetricKind::Precision);
    fill(result.metrics.f1, MetricKind::F1);
    fill(result.metrics.far, MetricKind::Far);
    fill(result.metrics.auroc, MetricKind::Auroc);
}

struct McNemarResult {
    std::size_t b = 0;  // A correct, B wrong
    std::size_t c = 0;  // A wrong, B correct
    // Set only on the chi-squared branch; the exact branch has no statistic.
    std::optional<double> statistic;
    double p_value = 1.0;
    bool exact = false;
};

namespace detail {

// P(X <= k) for X ~ Binomial(n, 1/2). Only used for n < 25, where the terms
// are small integers times 2^-n and the sum is exact.
inline double binomial_half_cdf(std::size_t k, std::size_t n) {
    double term = std::ldexp(1.0, -static_cast<int>(n));  // C(n,0) * 2^-n
    double sum = term;
    for (std::size_t i = 1; i <= k; ++i) {
        term *= static_cast<double>(n - i + 1) / static_cast<double>(i);
        sum += term;
    }
    return sum;
}

}  // namespace detail

inline McNemarResult mcnemar(const std::vector<BinaryLabel>& preds_a,
                             const std::vector<BinaryLabel>& preds_b,
                             const std::vector<BinaryLabel>& truths) {
    if (preds_a.size() != truths.size() || preds_b.size() != truths.size())
        throw LengthMismatch("paired predictions and truths differ in length");

    McNemarResult out;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const bool a_correct = preds_a[i] == truths[i];
        const bool b_correct = preds_b[i] == truths[i];
        if (a_correct && !b_correct) ++out.b;
        else if (!a_correct && b_correct) ++out.c;
    }
    const std::size_t discordant = out.b + out.c;
    if (discordant == 0) {
        out.exact = true;
        out.p_value = 1.0;
        return out;
    }
    if (discordant < 25) {
        out.exact = true;
        out.p_value =
            std::min(1.0, 2.0 * detail::binomial_half_cdf(std::min(out.b, out.c), discordant));
        return out;
    }
    const double diff = std::fabs(static_cast<double>(out.b) - static_cast<double>(out.c)) - 1.0;
    const double chi2 = diff * diff / static_cast<double>(discordant);
    out.statistic = chi2;
    // chi^2 with 1 dof: survival(x) = erfc(sqrt(x/2)).
    out.p_value = std::erfc(std::sqrt(chi2 / 2.0));
    return out;
}

}  // namespace pumpcast
