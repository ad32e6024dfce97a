#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/models/tree.hpp"
#include "pumpcast/stats.hpp"

namespace pumpcast {

struct BoostedConfig {
    int rounds = 200;  // M; 0 is allowed and yields the base score alone
    double learning_rate = 0.1;
    int max_depth = 4;
    int min_samples_leaf = 1;
    double lambda = 1.0;  // L2 on leaf weights
    double gamma = 0.0;   // per-leaf penalty
};

struct BoostedModel {
    std::vector<Tree> trees;
    BoostedConfig config;
    double base_score = 0.0;  // log-odds of the training positive rate
    std::vector<std::string> feature_names;
    std::vector<double> training_loss;  // mean logistic loss after each round
};

// Second-order boosting with logistic loss: per round, g = p - y and
// h = p(1-p) feed an exact-greedy regression tree, added with the learning
// rate. Training loss must not increase; three consecutive increases beyond
// tolerance abort with DivergenceDetected.
inline BoostedModel train_boosted(const LabeledDataset& dataset, const BoostedConfig& config) {
    if (dataset.size() == 0) throw EmptyInput("cannot train on an empty dataset");
    if (config.rounds < 0) throw ConfigError("rounds must be >= 0");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (config.lambda < 0.0 || config.gamma < 0.0)
        throw ConfigError("lambda and gamma must be >= 0");
    require_trainable_split(dataset);
    require_both_classes(dataset);

    const std::size_t n = dataset.size();
    const double pos_rate =
        static_cast<double>(dataset.count(BinaryLabel::Positive)) / static_cast<double>(n);

    BoostedModel model;
    model.config = config;
    model.feature_names = dataset.feature_names;
    model.base_score = std::log(pos_rate / (1.0 - pos_rate));

    TreeConfig tree_config;
    tree_config.max_depth = config.max_depth;
    tree_config.min_samples_leaf = config.min_samples_leaf;
    tree_config.features_per_split = 0;  // exact greedy over all features
    tree_config.lambda = config.lambda;
    tree_config.gamma = config.gamma;

    std::vector<double> margin(n, model.base_score);
    std::vector<GradientPair> gradients(n);
    constexpr double tolerance = 1e-9;
    double prev_loss = std::numeric_limits<double>::infinity();
    int rising_rounds = 0;

    for (int round = 0; round < config.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            const double y = dataset.samples[i].label == BinaryLabel::Positive ? 1.0 : 0.0;
            gradients[i].g = p - y;
            gradients[i].h = p * (1.0 - p);
        }
        std::vector<std::size_t> indices(n);
        std::iota(indices.begin(), indices.end(), std::size_t{0});
        Tree tree =
            train_tree_second_order(dataset.samples, gradients, std::move(indices), tree_config);

        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += config.learning_rate * tree.evaluate(dataset.samples[i].features);
            const double y = dataset.samples[i].label == BinaryLabel::Positive ? 1.0 : 0.0;
            loss += logistic_loss(y, sigmoid(margin[i]));
        }
        loss /= static_cast<double>(n);
        model.trees.push_back(std::move(tree));
        model.training_loss.push_back(loss);

        if (loss > prev_loss + tolerance) {
            if (++rising_rounds >= 3)
                throw DivergenceDetected("training loss increased for 3 consecutive rounds");
        } else {
            rising_rounds = 0;
        }
        prev_loss = loss;
    }
    return model;
}

inline double margin_of(const BoostedModel& model, std::span<const double> features) {
    double margin = model.base_score;
    for (const auto& tree : model.trees)
        margin += model.config.learning_rate * tree.evaluate(features);
    return margin;
}

inline Prediction predict(const BoostedModel& model, std::span<const double> features) {
    if (features.size() != model.feature_names.size())
        throw FeatureOrderMismatch("feature vector length does not match the trained model");
    Prediction out;
    out.score = sigmoid(margin_of(model, features));
    out.label = label_from_score(out.score);
    return out;
}

}  // namespace pumpcast
