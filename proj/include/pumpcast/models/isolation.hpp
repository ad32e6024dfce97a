#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/stats.hpp"

namespace pumpcast {

struct IsolationConfig {
    int n_trees = 100;
    int subsample = 256;
    std::uint64_t seed = 0;
};

struct IsolationNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double split_value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t size = 0;  // leaf: number of subsample rows that ended here
};

struct IsolationModel {
    std::vector<std::vector<IsolationNode>> trees;
    IsolationConfig config;
    std::size_t effective_subsample = 0;
    // Anomaly scores above this flag a sample as Positive; calibrated so the
    // flagged fraction of training Negatives matches the training positive rate.
    double threshold = 1.0;
    std::vector<std::string> feature_names;
};

namespace detail {

// Average unsuccessful-search path length in a BST of n nodes.
inline double average_path_length(std::size_t n) {
    if (n < 2) return 0.0;
    if (n == 2) return 1.0;
    constexpr double euler_gamma = 0.5772156649015329;
    const double nd = static_cast<double>(n);
    return 2.0 * (std::log(nd - 1.0) + euler_gamma) - 2.0 * (nd - 1.0) / nd;
}

inline std::int32_t grow_isolation(std::vector<IsolationNode>& nodes,
                                   const std::vector<std::vector<double>>& rows,
                                   std::vector<std::size_t> indices, int depth, int height_limit,
                                   Rng& rng) {
    const std::int32_t id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes.back().size = static_cast<std::int32_t>(indices.size());
    if (indices.size() <= 1 || depth >= height_limit) return id;

    const std::size_t dim = rows[indices[0]].size();
    // Features with spread; a constant column cannot isolate anything.
    std::vector<std::size_t> usable;
    for (std::size_t f = 0; f < dim; ++f) {
        double lo = rows[indices[0]][f], hi = lo;
        for (std::size_t i : indices) {
            lo = std::min(lo, rows[i][f]);
            hi = std::max(hi, rows[i][f]);
        }
        if (hi > lo) usable.push_back(f);
    }
    if (usable.empty()) return id;

    const std::size_t f = usable[rng.uniform_index(usable.size())];
    double lo = rows[indices[0]][f], hi = lo;
    for (std::size_t i : indices) {
        lo = std::min(lo, rows[i][f]);
        hi = std::max(hi, rows[i][f]);
    }
    const double split = lo + rng.uniform() * (hi - lo);

    std::vector<std::size_t> left, right;
    for (std::size_t i : indices)
        (rows[i][f] < split ? left : right).push_back(i);
    if (left.empty() || right.empty()) return id;  // degenerate draw at the boundary

    nodes[static_cast<std::size_t>(id)].feature = static_cast<std::int32_t>(f);
    nodes[static_cast<std::size_t>(id)].split_value = split;
    const std::int32_t l =
        grow_isolation(nodes, rows, std::move(left), depth + 1, height_limit, rng);
    const std::int32_t r =
        grow_isolation(nodes, rows, std::move(right), depth + 1, height_limit, rng);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
}

inline double isolation_path_length(const std::vector<IsolationNode>& nodes,
                                    std::span<const double> x) {
    std::int32_t i = 0;
    double depth = 0.0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(node.feature)] < node.split_value ? node.left : node.right;
        depth += 1.0;
    }
    return depth +
           average_path_length(static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)].size));
}

}  // namespace detail

// Anomaly score in (0,1); higher means more isolated.
inline double isolation_score(const IsolationModel& model, std::span<const double> features) {
    double total = 0.0;
    for (const auto& tree : model.trees)
        total += detail::isolation_path_length(tree, features);
    const double mean_path = total / static_cast<double>(model.trees.size());
    const double c = detail::average_path_length(model.effective_subsample);
    if (c <= 0.0) return 0.5;
    return std::pow(2.0, -mean_path / c);
}

// Trains on the Negative rows of the training split only; positives are
// neither subsampled nor scored during fitting. The decision threshold is the
// (1 - positive_rate) quantile of the training negatives' anomaly scores.
inline IsolationModel train_isolation(const LabeledDataset& dataset,
                                      const IsolationConfig& config) {
    if (dataset.size() == 0) throw EmptyInput("cannot train on an empty dataset");
    if (config.n_trees < 1 || config.subsample < 2)
        throw ConfigError("isolation forest needs n_trees >= 1 and subsample >= 2");
    require_trainable_split(dataset);

    std::vector<std::vector<double>> negatives;
    std::size_t positives = 0;
    for (const auto& s : dataset.samples) {
        if (s.label == BinaryLabel::Negative)
            negatives.push_back(s.features);
        else
            ++positives;
    }
    if (negatives.size() < 2)
        throw TooFewSamples("isolation forest needs at least 2 negative training samples");

    IsolationModel model;
    model.config = config;
    model.feature_names = dataset.feature_names;
    model.effective_subsample =
        std::min(static_cast<std::size_t>(config.subsample), negatives.size());

    const int height_limit = static_cast<int>(
        std::ceil(std::log2(static_cast<double>(model.effective_subsample))));

    model.trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(config.seed,
                            hash_name("isolation.tree") ^ static_cast<std::uint64_t>(t)));
        // Partial Fisher-Yates draw without replacement.
        std::vector<std::size_t> pool(negatives.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        std::vector<std::size_t> subsample;
        subsample.reserve(model.effective_subsample);
        for (std::size_t i = 0; i < model.effective_subsample; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            subsample.push_back(pool[i]);
        }
        std::vector<IsolationNode> nodes;
        detail::grow_isolation(nodes, negatives, std::move(subsample), 0, height_limit, rng);
        model.trees.push_back(std::move(nodes));
    }

    const double pos_rate =
        static_cast<double>(positives) / static_cast<double>(dataset.size());
    std::vector<double> scores;
    scores.reserve(negatives.size());
    for (const auto& row : negatives) scores.push_back(isolation_score(model, row));
    model.threshold = percentile_interpolated(std::move(scores), 1.0 - pos_rate);
    return model;
}

inline Prediction predict(const IsolationModel& model, std::span<const double> features) {
    if (features.size() != model.feature_names.size())
        throw FeatureOrderMismatch("feature vector length does not match the trained model");
    Prediction out;
    out.score = isolation_score(model, features);
    out.label = out.score > model.threshold ? BinaryLabel::Positive : BinaryLabel::Negative;
    return out;
}

}  // namespace pumpcast
