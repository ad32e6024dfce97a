#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "pumpcast/balance.hpp"
#include "pumpcast/error.hpp"
#include "test_util.hpp"

using namespace pumpcast;
using testutil::imbalanced_dataset;

namespace {

SmoteConfig config_with_seed(std::uint64_t seed) {
    SmoteConfig cfg;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("smote keeps the originals as an untouched prefix") {
    const auto train = imbalanced_dataset(200, 6, 0.1, 11);
    const auto result = smote(train, config_with_seed(1));
    REQUIRE(result.dataset.size() > train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        REQUIRE(result.dataset.samples[i].features == train.samples[i].features);
        REQUIRE(result.dataset.samples[i].label == train.samples[i].label);
        REQUIRE_FALSE(result.dataset.samples[i].synthetic);
    }
}

TEST_CASE("every synthetic sample is the audited interpolation of its parents") {
    const auto train = imbalanced_dataset(300, 8, 0.12, 17);
    for (const bool standardize : {true, false}) {
        SmoteConfig cfg = config_with_seed(5);
        cfg.standardize = standardize;
        const auto result = smote(train, cfg);
        REQUIRE_FALSE(result.audit.empty());
        REQUIRE(result.audit.size() == result.dataset.size() - train.size());

        for (const auto& entry : result.audit) {
            REQUIRE(entry.synthetic_index >= train.size());
            REQUIRE(entry.parent_a < train.size());
            REQUIRE(entry.parent_b < train.size());
            REQUIRE(entry.parent_a != entry.parent_b);
            REQUIRE(entry.u >= 0.0);
            REQUIRE(entry.u < 1.0);

            const auto& synth = result.dataset.samples[entry.synthetic_index];
            const auto& fa = train.samples[entry.parent_a].features;
            const auto& fb = train.samples[entry.parent_b].features;
            REQUIRE(train.samples[entry.parent_a].label == BinaryLabel::Positive);
            REQUIRE(train.samples[entry.parent_b].label == BinaryLabel::Positive);
            REQUIRE(synth.synthetic);
            REQUIRE(synth.label == BinaryLabel::Positive);
            REQUIRE_FALSE(synth.anchor_minute.has_value());

            for (std::size_t f = 0; f < fa.size(); ++f) {
                const double lo = std::min(fa[f], fb[f]);
                const double hi = std::max(fa[f], fb[f]);
                const double span = std::max(1.0, hi - lo);
                REQUIRE(synth.features[f] >= lo - 1e-9 * span);
                REQUIRE(synth.features[f] <= hi + 1e-9 * span);
                // Interpolation happens in raw feature space.
                const double expect = fa[f] + entry.u * (fb[f] - fa[f]);
                REQUIRE(std::abs(synth.features[f] - expect) <=
                        1e-12 * std::max(1.0, std::abs(expect)));
            }
        }
    }
}

TEST_CASE("smote approaches the target ratio as closely as integers allow") {
    for (const double ratio : {1.0, 0.5, 0.8}) {
        const auto train = imbalanced_dataset(260, 5, 0.1, 23);
        SmoteConfig cfg = config_with_seed(9);
        cfg.target_ratio = ratio;
        const auto result = smote(train, cfg);
        const auto pos = static_cast<double>(result.dataset.count(BinaryLabel::Positive));
        const auto neg = static_cast<double>(result.dataset.count(BinaryLabel::Negative));
        REQUIRE(neg == static_cast<double>(train.count(BinaryLabel::Negative)));
        REQUIRE(std::abs(pos / neg - ratio) <= 1.0 / neg + 1e-12);
    }
}

TEST_CASE("smote is deterministic per seed") {
    const auto train = imbalanced_dataset(150, 4, 0.15, 31);
    const auto a = smote(train, config_with_seed(3));
    const auto b = smote(train, config_with_seed(3));
    REQUIRE(a.dataset.size() == b.dataset.size());
    for (std::size_t i = 0; i < a.dataset.size(); ++i)
        REQUIRE(a.dataset.samples[i].features == b.dataset.samples[i].features);
    REQUIRE(smote_audit_to_csv(a.audit) == smote_audit_to_csv(b.audit));

    const auto c = smote(train, config_with_seed(4));
    bool differs = false;
    for (std::size_t i = train.size(); i < a.dataset.size(); ++i)
        if (a.dataset.samples[i].features != c.dataset.samples[i].features) differs = true;
    REQUIRE(differs);
}

TEST_CASE("smote refuses the test split") {
    auto train = imbalanced_dataset(100, 3, 0.2, 7);
    train.tag = SplitTag::Test;
    REQUIRE_THROWS_AS(smote(train, config_with_seed(1)), AppliedToTestSplit);
}

TEST_CASE("smote needs at least two minority samples") {
    auto train = imbalanced_dataset(50, 3, 0.0, 7);
    train.samples[0].label = BinaryLabel::Positive;  // a lone positive
    REQUIRE_THROWS_AS(smote(train, config_with_seed(1)), MinorityTooSmall);
}

TEST_CASE("a balanced dataset passes through unchanged") {
    const auto train = imbalanced_dataset(100, 3, 0.5, 7);
    const auto result = smote(train, config_with_seed(2));
    REQUIRE(result.dataset.size() == train.size());
    REQUIRE(result.audit.empty());

    // Minority already at the (low) target: also a no-op.
    const auto skewed = imbalanced_dataset(120, 3, 0.25, 7);
    SmoteConfig cfg = config_with_seed(2);
    cfg.target_ratio = 0.3;
    REQUIRE(smote(skewed, cfg).audit.empty());
}

TEST_CASE("when positives dominate, negatives are synthesized instead") {
    const auto train = imbalanced_dataset(200, 4, 0.85, 13);
    const auto result = smote(train, config_with_seed(6));
    REQUIRE(result.dataset.count(BinaryLabel::Positive) == train.count(BinaryLabel::Positive));
    REQUIRE(result.dataset.count(BinaryLabel::Negative) >
            train.count(BinaryLabel::Negative));
    for (const auto& entry : result.audit) {
        REQUIRE(train.samples[entry.parent_a].label == BinaryLabel::Negative);
        REQUIRE(result.dataset.samples[entry.synthetic_index].label == BinaryLabel::Negative);
    }
}

TEST_CASE("two identical minority points can only spawn themselves") {
    LabeledDataset train;
    train.tag = SplitTag::Train;
    train.feature_names = {"f0", "f1"};
    for (int i = 0; i < 12; ++i) {
        Sample s;
        s.features = {static_cast<double>(i), static_cast<double>(i % 3)};
        s.label = BinaryLabel::Negative;
        train.samples.push_back(s);
    }
    for (int i = 0; i < 2; ++i) {
        Sample s;
        s.features = {100.0, 7.5};
        s.label = BinaryLabel::Positive;
        train.samples.push_back(s);
    }
    const auto result = smote(train, config_with_seed(3));
    REQUIRE(result.audit.size() == 10);
    for (const auto& entry : result.audit) {
        const auto& f = result.dataset.samples[entry.synthetic_index].features;
        REQUIRE(f == std::vector<double>{100.0, 7.5});
    }
}

TEST_CASE("three minority points in the plane spawn along the segments") {
    LabeledDataset train;
    train.tag = SplitTag::Train;
    train.feature_names = {"x", "y"};
    const std::vector<std::vector<double>> minority = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}};
    for (const auto& point : minority) {
        Sample s;
        s.features = point;
        s.label = BinaryLabel::Positive;
        train.samples.push_back(s);
    }
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        Sample s;
        s.features = {5.0 + rng.uniform(), 5.0 + rng.uniform()};
        s.label = BinaryLabel::Negative;
        train.samples.push_back(s);
    }
    SmoteConfig cfg = config_with_seed(8);
    cfg.k_neighbors = 2;
    const auto result = smote(train, cfg);
    REQUIRE(result.audit.size() == 27);
    for (const auto& entry : result.audit) {
        const auto& s = result.dataset.samples[entry.synthetic_index].features;
        const auto& a = train.samples[entry.parent_a].features;
        const auto& b = train.samples[entry.parent_b].features;
        const double bx = b[0] - a[0], by = b[1] - a[1];
        const double sx = s[0] - a[0], sy = s[1] - a[1];
        const double len_sq = bx * bx + by * by;
        REQUIRE(len_sq > 0.0);
        const double cross = sx * by - sy * bx;
        REQUIRE(std::abs(cross) <= 1e-9 * len_sq);
        const double dot = sx * bx + sy * by;
        REQUIRE(dot >= -1e-9 * len_sq);
        REQUIRE(dot <= len_sq * (1.0 + 1e-9));
    }
}

TEST_CASE("the standardize switch changes the neighbor graph") {
    LabeledDataset train;
    train.tag = SplitTag::Train;
    train.feature_names = {"small", "large"};
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        Sample s;
        s.features = {rng.uniform() * 10.0, rng.uniform() * 1e6};
        s.label = BinaryLabel::Negative;
        train.samples.push_back(s);
    }
    const std::vector<std::vector<double>> minority = {
        {0.0, 0.0}, {10.0, 1000.0}, {0.1, 900000.0}};
    for (const auto& point : minority) {
        Sample s;
        s.features = point;
        s.label = BinaryLabel::Positive;
        train.samples.push_back(s);
    }
    SmoteConfig on = config_with_seed(2);
    on.k_neighbors = 1;
    SmoteConfig off = on;
    off.standardize = false;
    const auto with = smote(train, on);
    const auto without = smote(train, off);
    REQUIRE(with.dataset.size() == without.dataset.size());
    bool differs = false;
    for (std::size_t i = train.size(); i < with.dataset.size(); ++i)
        if (with.dataset.samples[i].features != without.dataset.samples[i].features)
            differs = true;
    REQUIRE(differs);
}

TEST_CASE("audit csv carries one row per synthetic sample") {
    const auto train = imbalanced_dataset(120, 3, 0.1, 3);
    const auto result = smote(train, config_with_seed(7));
    const auto text = smote_audit_to_csv(result.audit);
    REQUIRE(text.rfind("synthetic_index,parent_a,parent_b,u\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    REQUIRE(lines == result.audit.size() + 1);
}

TEST_CASE("smote config validation") {
    const auto train = imbalanced_dataset(60, 3, 0.2, 3);
    SmoteConfig cfg = config_with_seed(1);
    cfg.k_neighbors = 0;
    REQUIRE_THROWS_AS(smote(train, cfg), ConfigError);
    cfg = config_with_seed(1);
    cfg.target_ratio = 0.0;
    REQUIRE_THROWS_AS(smote(train, cfg), ConfigError);
    cfg.target_ratio = 1.5;
    REQUIRE_THROWS_AS(smote(train, cfg), ConfigError);
}
