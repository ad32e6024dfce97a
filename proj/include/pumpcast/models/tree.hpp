#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/rng.hpp"

namespace pumpcast {

// ---------------------------------------------------------------------------
// Binary decision tree over a flat node array. Leaves carry either the
// positive-class probability (classification) or an additive leaf weight
// (boosting). Navigation rule: x[feature] < threshold goes left.
// ---------------------------------------------------------------------------

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
    // Importance bookkeeping: split gain weighted by the node's sample share.
    double gain = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double evaluate(std::span<const double> x) const {
        std::int32_t i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& node = nodes[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left
                                                                           : node.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }
};

struct GradientPair {
    double g = 0.0;
    double h = 0.0;
};

struct TreeConfig {
    int max_depth = 12;
    int min_samples_leaf = 2;
    // Number of features considered per split; 0 means all.
    int features_per_split = 0;
    // Second-order mode only.
    double lambda = 1.0;
    double gamma = 0.0;
};

namespace detail {

struct SplitChoice {
    bool found = false;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline double gini(std::size_t pos, std::size_t n) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

// Candidate features for one node: either all of them or a random subset,
// scanned in ascending index order so tie-breaking is deterministic.
inline std::vector<std::int32_t> candidate_features(std::size_t dim, int per_split, Rng* rng) {
    std::vector<std::int32_t> all(dim);
    for (std::size_t f = 0; f < dim; ++f) all[f] = static_cast<std::int32_t>(f);
    if (per_split <= 0 || static_cast<std::size_t>(per_split) >= dim || rng == nullptr)
        return all;
    for (int i = 0; i < per_split; ++i) {
        const std::size_t j = i + rng->uniform_index(dim - static_cast<std::size_t>(i));
        std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    all.resize(static_cast<std::size_t>(per_split));
    std::sort(all.begin(), all.end());
    return all;
}

class TreeBuilder {
public:
    // Classification mode: labels present, gradients empty.
    // Second-order mode: gradients present (indexed like samples), labels unused.
    TreeBuilder(const std::vector<Sample>& samples, const std::vector<GradientPair>* gradients,
                const TreeConfig& config, Rng* rng)
        : samples_(samples), gradients_(gradients), config_(config), rng_(rng) {}

    Tree build(std::vector<std::size_t> indices) {
        if (indices.empty()) throw EmptyInput("cannot train a tree on zero samples");
        root_size_ = indices.size();
        Tree tree;
        grow(tree, std::move(indices), 0);
        return tree;
    }

private:
    bool second_order() const { return gradients_ != nullptr; }

    double leaf_value(const std::vector<std::size_t>& indices) const {
        if (second_order()) {
            double g = 0.0, h = 0.0;
            for (std::size_t i : indices) {
                g += (*gradients_)[i].g;
                h += (*gradients_)[i].h;
            }
            return -g / (h + config_.lambda);
        }
        std::size_t pos = 0;
        for (std::size_t i : indices)
            pos += samples_[i].label == BinaryLabel::Positive ? 1 : 0;
        return static_cast<double>(pos) / static_cast<double>(indices.size());
    }

    SplitChoice best_split(const std::vector<std::size_t>& indices) const {
        SplitChoice best;
        const std::size_t n = indices.size();
        const std::size_t dim = samples_[indices[0]].features.size();
        const auto features =
            candidate_features(dim, config_.features_per_split, rng_);
        const std::size_t min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);

        // Parent aggregates.
        double parent_score = 0.0;
        double total_g = 0.0, total_h = 0.0;
        std::size_t total_pos = 0;
        if (second_order()) {
            for (std::size_t i : indices) {
                total_g += (*gradients_)[i].g;
                total_h += (*gradients_)[i].h;
            }
            parent_score = total_g * total_g / (total_h + config_.lambda);
        } else {
            for (std::size_t i : indices)
                total_pos += samples_[i].label == BinaryLabel::Positive ? 1 : 0;
            parent_score = gini(total_pos, n);
        }

        std::vector<std::size_t> order(indices);
        for (std::int32_t f : features) {
            const std::size_t fi = static_cast<std::size_t>(f);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return samples_[a].features[fi] < samples_[b].features[fi];
            });

            double left_g = 0.0, left_h = 0.0;
            std::size_t left_pos = 0;
            for (std::size_t pos = 1; pos < n; ++pos) {
                const std::size_t prev = order[pos - 1];
                if (second_order()) {
                    left_g += (*gradients_)[prev].g;
                    left_h += (*gradients_)[prev].h;
                } else {
                    left_pos += samples_[prev].label == BinaryLabel::Positive ? 1 : 0;
                }
                const double lo = samples_[prev].features[fi];
                const double hi = samples_[order[pos]].features[fi];
                if (lo == hi) continue;  // not a boundary between distinct values
                if (pos < min_leaf || n - pos < min_leaf) continue;

                double gain;
                if (second_order()) {
                    const double right_g = total_g - left_g;
                    const double right_h = total_h - left_h;
                    gain = 0.5 * (left_g * left_g / (left_h + config_.lambda) +
                                  right_g * right_g / (right_h + config_.lambda) -
                                  parent_score) -
                           config_.gamma;
                } else {
                    const double nl = static_cast<double>(pos);
                    const double nr = static_cast<double>(n - pos);
                    const double nn = static_cast<double>(n);
                    gain = parent_score - (nl / nn) * gini(left_pos, pos) -
                           (nr / nn) * gini(total_pos - left_pos, n - pos);
                }
                // Strict improvement required, so the lowest (feature,
                // threshold) pair wins among exact ties.
                if (gain > 0.0 && (!best.found || gain > best.gain)) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = (lo + hi) / 2.0;
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    std::int32_t grow(Tree& tree, std::vector<std::size_t> indices, int depth) {
        const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().value = leaf_value(indices);

        const std::size_t n = indices.size();
        if (depth >= config_.max_depth ||
            n < 2 * static_cast<std::size_t>(config_.min_samples_leaf) || n < 2)
            return id;
        if (!second_order()) {
            // Pure nodes cannot be improved.
            std::size_t pos = 0;
            for (std::size_t i : indices)
                pos += samples_[i].label == BinaryLabel::Positive ? 1 : 0;
            if (pos == 0 || pos == n) return id;
        }

        const SplitChoice split = best_split(indices);
        if (!split.found) return id;

        std::vector<std::size_t> left, right;
        left.reserve(n);
        right.reserve(n);
        const std::size_t fi = static_cast<std::size_t>(split.feature);
        for (std::size_t i : indices) {
            if (samples_[i].features[fi] < split.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        tree.nodes[static_cast<std::size_t>(id)].gain =
            split.gain * static_cast<double>(n) / static_cast<double>(root_size_);
        const std::int32_t l = grow(tree, std::move(left), depth + 1);
        const std::int32_t r = grow(tree, std::move(right), depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    const std::vector<Sample>& samples_;
    const std::vector<GradientPair>* gradients_;
    TreeConfig config_;
    Rng* rng_;
    std::size_t root_size_ = 0;
};

}  // namespace detail

// Classification tree: greedy splits maximizing weighted Gini decrease over an
// exhaustive midpoint scan (optionally on a random feature subset per node).
inline Tree train_tree(const std::vector<Sample>& samples, std::vector<std::size_t> indices,
                       const TreeConfig& config, Rng* rng = nullptr) {
    detail::TreeBuilder builder(samples, nullptr, config, rng);
    return builder.build(std::move(indices));
}

// Second-order boosting tree: split gain
//   1/2 [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma,
// leaf weight -G/(H+lambda).
inline Tree train_tree_second_order(const std::vector<Sample>& samples,
                                    const std::vector<GradientPair>& gradients,
                                    std::vector<std::size_t> indices, const TreeConfig& config,
                                    Rng* rng = nullptr) {
    if (gradients.size() != samples.size())
        throw LengthMismatch("gradient list must align with the sample list");
    detail::TreeBuilder builder(samples, &gradients, config, rng);
    return builder.build(std::move(indices));
}

}  // namespace pumpcast
