#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/models/tree.hpp"
#include "test_util.hpp"

using namespace pumpcast;

namespace {

std::vector<Sample> samples_1d(const std::vector<double>& xs, const std::vector<int>& ys) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Sample s;
        s.features = {xs[i]};
        s.label = ys[i] ? BinaryLabel::Positive : BinaryLabel::Negative;
        out.push_back(s);
    }
    return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

struct OracleSplit {
    bool found = false;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double oracle_gini(std::size_t pos, std::size_t n) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

// Exhaustive scan over every feature and every midpoint between distinct
// adjacent values, honoring min_samples_leaf. First strictly greater gain
// wins, so ties resolve to the lowest (feature, threshold).
OracleSplit oracle_best_split(const std::vector<Sample>& samples,
                              const std::vector<GradientPair>* gradients,
                              const TreeConfig& config) {
    OracleSplit best;
    const std::size_t n = samples.size();
    const std::size_t dim = samples[0].features.size();
    const auto min_leaf = static_cast<std::size_t>(config.min_samples_leaf);

    double total_g = 0.0, total_h = 0.0;
    std::size_t total_pos = 0;
    if (gradients) {
        for (const auto& gp : *gradients) {
            total_g += gp.g;
            total_h += gp.h;
        }
    } else {
        for (const auto& s : samples) total_pos += s.label == BinaryLabel::Positive ? 1 : 0;
    }

    auto order = all_indices(n);
    for (std::size_t f = 0; f < dim; ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return samples[a].features[f] < samples[b].features[f];
        });
        double left_g = 0.0, left_h = 0.0;
        std::size_t left_pos = 0;
        for (std::size_t pos = 1; pos < n; ++pos) {
            const auto prev = order[pos - 1];
            if (gradients) {
                left_g += (*gradients)[prev].g;
                left_h += (*gradients)[prev].h;
            } else {
                left_pos += samples[prev].label == BinaryLabel::Positive ? 1 : 0;
            }
            const double lo = samples[prev].features[f];
            const double hi = samples[order[pos]].features[f];
            if (lo == hi) continue;
            if (pos < min_leaf || n - pos < min_leaf) continue;
            double gain;
            if (gradients) {
                const double rg = total_g - left_g;
                const double rh = total_h - left_h;
                gain = 0.5 * (left_g * left_g / (left_h + config.lambda) +
                              rg * rg / (rh + config.lambda) -
                              total_g * total_g / (total_h + config.lambda)) -
                       config.gamma;
            } else {
                const double nl = static_cast<double>(pos);
                const double nr = static_cast<double>(n - pos);
                const double nn = static_cast<double>(n);
                gain = oracle_gini(total_pos, n) - (nl / nn) * oracle_gini(left_pos, pos) -
                       (nr / nn) * oracle_gini(total_pos - left_pos, n - pos);
            }
            if (gain > 0.0 && (!best.found || gain > best.gain)) {
                best.found = true;
                best.feature = static_cast<std::int32_t>(f);
                best.threshold = (lo + hi) / 2.0;
                best.gain = gain;
            }
        }
    }
    return best;
}

int tree_depth(const Tree& tree, std::int32_t node = 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(tree_depth(tree, n.left), tree_depth(tree, n.right));
}

}  // namespace

TEST_CASE("a separable single feature is split at the midpoint") {
    const auto samples = samples_1d({-3, -2, -1, 1, 2, 3}, {0, 0, 0, 1, 1, 1});
    TreeConfig cfg;
    cfg.min_samples_leaf = 1;
    const auto tree = train_tree(samples, all_indices(6), cfg);
    REQUIRE(tree.nodes.size() == 3);
    REQUIRE(tree.nodes[0].feature == 0);
    REQUIRE(tree.nodes[0].threshold == 0.0);
    for (const auto& s : samples) {
        const double p = tree.evaluate(s.features);
        REQUIRE(p == (s.label == BinaryLabel::Positive ? 1.0 : 0.0));
    }
}

TEST_CASE("pure nodes stay leaves") {
    const auto samples = samples_1d({1, 2, 3, 4}, {1, 1, 1, 1});
    const auto tree = train_tree(samples, all_indices(4), TreeConfig{});
    REQUIRE(tree.nodes.size() == 1);
    REQUIRE(tree.nodes[0].is_leaf());
    REQUIRE(tree.nodes[0].value == 1.0);
}

TEST_CASE("equal twin features resolve to the lower index") {
    std::vector<Sample> samples;
    for (int i = 0; i < 8; ++i) {
        Sample s;
        const double x = static_cast<double>(i);
        s.features = {x, x};  // identical columns
        s.label = i < 4 ? BinaryLabel::Negative : BinaryLabel::Positive;
        samples.push_back(s);
    }
    TreeConfig cfg;
    cfg.min_samples_leaf = 1;
    const auto tree = train_tree(samples, all_indices(8), cfg);
    REQUIRE_FALSE(tree.nodes[0].is_leaf());
    REQUIRE(tree.nodes[0].feature == 0);
}

TEST_CASE("gini-mode root splits match exhaustive search on tiny datasets") {
    Rng rng(1001);
    int checked = 0;
    while (checked < 250) {
        const std::size_t n = 4 + rng.uniform_index(9);     // 4..12
        const std::size_t dim = 1 + rng.uniform_index(3);   // 1..3
        std::vector<Sample> samples;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            for (std::size_t f = 0; f < dim; ++f) {
                // Coarse grid so duplicate values and tie-breaks get exercised.
                const double v = rng.uniform_index(2) ? rng.uniform() * 4.0
                                                      : static_cast<double>(rng.uniform_index(5));
                s.features.push_back(v);
            }
            s.label = rng.uniform() < 0.5 ? BinaryLabel::Negative : BinaryLabel::Positive;
            pos += s.label == BinaryLabel::Positive ? 1 : 0;
            samples.push_back(s);
        }
        if (pos == 0 || pos == n) continue;

        TreeConfig cfg;
        cfg.max_depth = 1;
        cfg.min_samples_leaf = 1 + static_cast<int>(rng.uniform_index(2));
        const auto tree = train_tree(samples, all_indices(n), cfg);
        const auto want = oracle_best_split(samples, nullptr, cfg);
        if (!want.found) {
            REQUIRE(tree.nodes[0].is_leaf());
        } else {
            REQUIRE_FALSE(tree.nodes[0].is_leaf());
            REQUIRE(tree.nodes[0].feature == want.feature);
            REQUIRE(tree.nodes[0].threshold == want.threshold);
        }
        ++checked;
    }
}

TEST_CASE("second-order root splits match exhaustive search on tiny datasets") {
    Rng rng(2002);
    int checked = 0;
    while (checked < 250) {
        const std::size_t n = 4 + rng.uniform_index(9);
        const std::size_t dim = 1 + rng.uniform_index(3);
        std::vector<Sample> samples;
        std::vector<GradientPair> gradients;
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            for (std::size_t f = 0; f < dim; ++f)
                s.features.push_back(rng.uniform_index(2) ? rng.uniform() * 4.0
                                                          : static_cast<double>(
                                                                rng.uniform_index(5)));
            samples.push_back(s);
            GradientPair gp;
            gp.g = rng.uniform() - 0.5;
            gp.h = 0.05 + rng.uniform() * 0.25;
            gradients.push_back(gp);
        }
        TreeConfig cfg;
        cfg.max_depth = 1;
        cfg.min_samples_leaf = 1;
        cfg.lambda = 1.0;
        cfg.gamma = 0.0;
        const auto tree = train_tree_second_order(samples, gradients, all_indices(n), cfg);
        const auto want = oracle_best_split(samples, &gradients, cfg);
        if (!want.found) {
            REQUIRE(tree.nodes[0].is_leaf());
        } else {
            REQUIRE_FALSE(tree.nodes[0].is_leaf());
            REQUIRE(tree.nodes[0].feature == want.feature);
            REQUIRE(tree.nodes[0].threshold == want.threshold);
        }
        ++checked;
    }
}

TEST_CASE("hand-worked second-order stump") {
    // x = -2,-1,1,2 with gradients g = (.5,.5,-.5,-.5), h = .25 each: the split
    // lands at 0, leaf weights are -G/(H+lambda) = -/+ 2/3, gain = 2/3.
    std::vector<Sample> samples;
    for (double x : {-2.0, -1.0, 1.0, 2.0}) {
        Sample s;
        s.features = {x};
        samples.push_back(s);
    }
    std::vector<GradientPair> gradients = {{0.5, 0.25}, {0.5, 0.25}, {-0.5, 0.25}, {-0.5, 0.25}};
    TreeConfig cfg;
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 1;
    cfg.lambda = 1.0;
    cfg.gamma = 0.0;
    const auto tree = train_tree_second_order(samples, gradients, all_indices(4), cfg);
    REQUIRE(tree.nodes.size() == 3);
    REQUIRE(tree.nodes[0].feature == 0);
    REQUIRE(tree.nodes[0].threshold == 0.0);
    const auto left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)].value;
    const auto right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)].value;
    REQUIRE(left == Catch::Approx(-2.0 / 3.0).margin(1e-12));
    REQUIRE(right == Catch::Approx(2.0 / 3.0).margin(1e-12));
    REQUIRE(tree.nodes[0].gain == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("gamma shifts gains and can veto weak splits") {
    std::vector<Sample> samples;
    for (double x : {-2.0, -1.0, 1.0, 2.0}) {
        Sample s;
        s.features = {x};
        samples.push_back(s);
    }
    const std::vector<GradientPair> gradients = {
        {0.5, 0.25}, {0.5, 0.25}, {-0.5, 0.25}, {-0.5, 0.25}};
    TreeConfig cfg;
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 1;
    cfg.lambda = 1.0;
    cfg.gamma = 1.0;  // exceeds the best achievable gain of 2/3
    const auto tree = train_tree_second_order(samples, gradients, all_indices(4), cfg);
    REQUIRE(tree.nodes.size() == 1);
    REQUIRE(tree.nodes[0].is_leaf());
}

TEST_CASE("depth and leaf-size limits are honored") {
    const auto dataset = testutil::random_dataset(120, 3, 77, 0.15);
    TreeConfig cfg;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 5;
    const auto tree = train_tree(dataset.samples, all_indices(dataset.size()), cfg);
    REQUIRE(tree_depth(tree) <= 3);

    // Replay the descent and count samples per leaf.
    std::vector<std::size_t> leaf_count(tree.nodes.size(), 0);
    for (const auto& s : dataset.samples) {
        std::int32_t i = 0;
        while (!tree.nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& node = tree.nodes[static_cast<std::size_t>(i)];
            i = s.features[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left
                                                                                    : node.right;
        }
        ++leaf_count[static_cast<std::size_t>(i)];
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].is_leaf()) REQUIRE(leaf_count[i] >= 5);
}

TEST_CASE("monotone per-feature transforms leave training predictions unchanged") {
    const auto dataset = testutil::random_dataset(90, 4, 900, 0.1);
    TreeConfig cfg;
    cfg.max_depth = 6;
    cfg.min_samples_leaf = 2;
    const auto base = train_tree(dataset.samples, all_indices(dataset.size()), cfg);

    auto warped = dataset.samples;
    for (auto& s : warped)
        for (auto& v : s.features) v = v * v * v + 2.0 * v;  // strictly increasing
    const auto transformed = train_tree(warped, all_indices(warped.size()), cfg);

    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double a = base.evaluate(dataset.samples[i].features);
        const double b = transformed.evaluate(warped[i].features);
        REQUIRE(a == b);
    }
}

TEST_CASE("leaf probabilities are the positive fraction of their partition") {
    const auto samples = samples_1d({0, 1, 2, 3, 4, 10, 11, 12}, {0, 0, 1, 0, 0, 1, 1, 0});
    TreeConfig cfg;
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 3;
    const auto tree = train_tree(samples, all_indices(8), cfg);
    REQUIRE_FALSE(tree.nodes[0].is_leaf());
    // Split must sit at 7 (midpoint of 4 and 10) given min_leaf 3.
    REQUIRE(tree.nodes[0].threshold == 7.0);
    const auto& left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)];
    const auto& right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)];
    REQUIRE(left.value == 0.2);
    REQUIRE(right.value == Catch::Approx(2.0 / 3.0).margin(1e-15));
}

TEST_CASE("training on zero indices is an error") {
    const auto samples = samples_1d({1, 2}, {0, 1});
    REQUIRE_THROWS_AS(train_tree(samples, {}, TreeConfig{}), EmptyInput);
    REQUIRE_THROWS_AS(
        train_tree_second_order(samples, std::vector<GradientPair>(1), all_indices(2),
                                TreeConfig{}),
        LengthMismatch);
}
