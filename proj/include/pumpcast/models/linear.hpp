#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/stats.hpp"

namespace pumpcast {

struct LogisticConfig {
    double l2 = 1e-4;
    int epochs = 500;
    double learning_rate = 0.1;
};

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    // Standardization statistics from the training split.
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    std::vector<std::string> feature_names;
    LogisticConfig config;
};

// Full-batch gradient descent on L2-regularized logistic loss over z-scored
// features. No randomness: weights start at zero.
inline LogisticModel train_logistic(const LabeledDataset& dataset, const LogisticConfig& config) {
    if (dataset.size() == 0) throw EmptyInput("cannot train on an empty dataset");
    require_trainable_split(dataset);
    require_both_classes(dataset);

    const std::size_t n = dataset.size();
    const std::size_t dim = dataset.dimension();

    LogisticModel model;
    model.config = config;
    model.feature_names = dataset.feature_names;
    model.feature_mean.assign(dim, 0.0);
    model.feature_scale.assign(dim, 1.0);
    for (const auto& s : dataset.samples)
        for (std::size_t f = 0; f < dim; ++f) model.feature_mean[f] += s.features[f];
    for (std::size_t f = 0; f < dim; ++f) model.feature_mean[f] /= static_cast<double>(n);
    std::vector<double> var(dim, 0.0);
    for (const auto& s : dataset.samples)
        for (std::size_t f = 0; f < dim; ++f) {
            const double d = s.features[f] - model.feature_mean[f];
            var[f] += d * d;
        }
    for (std::size_t f = 0; f < dim; ++f) {
        const double sd = std::sqrt(var[f] / static_cast<double>(n));
        model.feature_scale[f] = sd > 0.0 ? sd : 1.0;
    }

    // Pre-standardize once.
    std::vector<double> z(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < dim; ++f)
            z[i * dim + f] =
                (dataset.samples[i].features[f] - model.feature_mean[f]) / model.feature_scale[f];

    model.weights.assign(dim, 0.0);
    std::vector<double> grad(dim);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double margin = model.bias;
            for (std::size_t f = 0; f < dim; ++f) margin += model.weights[f] * z[i * dim + f];
            const double y = dataset.samples[i].label == BinaryLabel::Positive ? 1.0 : 0.0;
            const double err = sigmoid(margin) - y;
            for (std::size_t f = 0; f < dim; ++f) grad[f] += err * z[i * dim + f];
            grad_bias += err;
        }
        for (std::size_t f = 0; f < dim; ++f) {
            grad[f] = grad[f] / static_cast<double>(n) + config.l2 * model.weights[f];
            model.weights[f] -= config.learning_rate * grad[f];
        }
        model.bias -= config.learning_rate * grad_bias / static_cast<double>(n);
    }
    return model;
}

inline Prediction predict(const LogisticModel& model, std::span<const double> features) {
    if (features.size() != model.weights.size())
        throw FeatureOrderMismatch("feature vector length does not match the trained model");
    double margin = model.bias;
    for (std::size_t f = 0; f < features.size(); ++f)
        margin +=
            model.weights[f] * (features[f] - model.feature_mean[f]) / model.feature_scale[f];
    Prediction out;
    out.score = sigmoid(margin);
    out.label = label_from_score(out.score);
    return out;
}

}  // namespace pumpcast
