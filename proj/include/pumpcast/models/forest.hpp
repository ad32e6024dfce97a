#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/models/tree.hpp"
#include "pumpcast/rng.hpp"

namespace pumpcast {

// Classifier output: hard label plus a positive-class score in [0,1].
// Score ties at 0.5 resolve Positive; missed faults cost more than alarms.
struct Prediction {
    BinaryLabel label = BinaryLabel::Negative;
    double score = 0.0;
};

inline BinaryLabel label_from_score(double score) {
    return score >= 0.5 ? BinaryLabel::Positive : BinaryLabel::Negative;
}

struct ForestConfig {
    int n_trees = 200;
    int max_depth = 12;
    int min_samples_leaf = 2;
    // 0 resolves to ceil(sqrt(dimension)) at training time.
    int features_per_split = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestConfig config;
    std::vector<std::string> feature_names;
};

inline void require_both_classes(const LabeledDataset& dataset) {
    const std::size_t pos = dataset.count(BinaryLabel::Positive);
    if (pos == 0 || pos == dataset.size())
        throw SingleClassInput("training data must contain both classes");
}

inline void require_trainable_split(const LabeledDataset& dataset) {
    if (dataset.tag == SplitTag::Test)
        throw AppliedToTestSplit("refusing to train on the test split");
}

// Bagged Gini trees with per-node feature subsampling. Each tree's RNG stream
// derives from (seed, tree index), so results do not depend on build order.
inline ForestModel train_forest(const LabeledDataset& dataset, const ForestConfig& config) {
    if (dataset.size() == 0) throw EmptyInput("cannot train a forest on an empty dataset");
    if (config.n_trees < 1) throw ConfigError("n_trees must be >= 1");
    require_trainable_split(dataset);
    require_both_classes(dataset);

    ForestModel model;
    model.config = config;
    model.feature_names = dataset.feature_names;

    TreeConfig tree_config;
    tree_config.max_depth = config.max_depth;
    tree_config.min_samples_leaf = config.min_samples_leaf;
    tree_config.features_per_split =
        config.features_per_split > 0
            ? config.features_per_split
            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dataset.dimension()))));

    const std::size_t n = dataset.size();
    model.trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(config.seed, hash_name("forest.tree") ^ static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> indices(n);
        if (config.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) indices[i] = rng.uniform_index(n);
        } else {
            std::iota(indices.begin(), indices.end(), std::size_t{0});
        }
        model.trees.push_back(
            train_tree(dataset.samples, std::move(indices), tree_config, &rng));
    }
    return model;
}

// Majority vote: each tree votes its leaf's majority class, the score is the
// fraction of positive votes.
inline Prediction predict(const ForestModel& model, std::span<const double> features) {
    if (features.size() != model.feature_names.size())
        throw FeatureOrderMismatch("feature vector length does not match the trained model");
    std::size_t votes = 0;
    for (const auto& tree : model.trees)
        votes += tree.evaluate(features) >= 0.5 ? 1 : 0;
    Prediction out;
    out.score = static_cast<double>(votes) / static_cast<double>(model.trees.size());
    out.label = label_from_score(out.score);
    return out;
}

// Mean decrease in impurity, averaged over trees and normalized to sum 1.
// Returned ranking is sorted by importance (ties keep feature order).
inline std::vector<std::pair<std::string, double>> feature_importance(const ForestModel& model) {
    std::vector<double> totals(model.feature_names.size(), 0.0);
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf()) totals[static_cast<std::size_t>(node.feature)] += node.gain;
    const double sum = std::accumulate(totals.begin(), totals.end(), 0.0);
    if (sum > 0.0)
        for (double& v : totals) v /= sum;

    std::vector<std::size_t> order(totals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(totals.size());
    for (std::size_t f : order) ranked.emplace_back(model.feature_names[f], totals[f]);
    return ranked;
}

}  // namespace pumpcast
