#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumpcast/error.hpp"
#include "pumpcast/models/baselines.hpp"
#include "pumpcast/models/boosted.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/textio.hpp"

namespace pumpcast {

using AnyModel = std::variant<ForestModel, BoostedModel, BaselineModel>;

// Serialization format version. Bump on any schema change.
inline constexpr int kModelFormatVersion = 1;

inline const char* model_kind_name(const AnyModel& model) {
    if (std::holds_alternative<ForestModel>(model)) return "forest";
    if (std::holds_alternative<BoostedModel>(model)) return "boosted";
    return baseline_name(std::get<BaselineModel>(model).kind);
}

inline Prediction predict(const AnyModel& model, const Sample& sample,
                          const PredictContext& context = {}) {
    if (const auto* forest = std::get_if<ForestModel>(&model)) return predict(*forest, sample.features);
    if (const auto* boosted = std::get_if<BoostedModel>(&model)) return predict(*boosted, sample.features);
    return predict(std::get<BaselineModel>(model), sample, context);
}

namespace detail {

// Trees are stored column-wise: one array per node field, nodes in the order
// they were allocated (node 0 is the root). JSON numbers round-trip binary64
// exactly, so reloading reproduces bit-identical predictions.
inline nlohmann::json tree_to_json(const Tree& tree) {
    nlohmann::json j;
    auto& feature = j["feature"] = nlohmann::json::array();
    auto& threshold = j["threshold"] = nlohmann::json::array();
    auto& left = j["left"] = nlohmann::json::array();
    auto& right = j["right"] = nlohmann::json::array();
    auto& value = j["value"] = nlohmann::json::array();
    auto& gain = j["gain"] = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.value);
        gain.push_back(node.gain);
    }
    return j;
}

inline Tree tree_from_json(const nlohmann::json& j) {
    Tree tree;
    const auto& feature = j.at("feature");
    const std::size_t n = feature.size();
    const auto& threshold = j.at("threshold");
    const auto& left = j.at("left");
    const auto& right = j.at("right");
    const auto& value = j.at("value");
    const auto& gain = j.at("gain");
    if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
        gain.size() != n)
        throw DataError("model file: tree node arrays have mismatched lengths");
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tree.nodes[i].feature = feature[i].get<std::int32_t>();
        tree.nodes[i].threshold = threshold[i].get<double>();
        tree.nodes[i].left = left[i].get<std::int32_t>();
        tree.nodes[i].right = right[i].get<std::int32_t>();
        tree.nodes[i].value = value[i].get<double>();
        tree.nodes[i].gain = gain[i].get<double>();
    }
    return tree;
}

inline nlohmann::json isolation_tree_to_json(const std::vector<IsolationNode>& nodes) {
    nlohmann::json j;
    auto& feature = j["feature"] = nlohmann::json::array();
    auto& split = j["split_value"] = nlohmann::json::array();
    auto& left = j["left"] = nlohmann::json::array();
    auto& right = j["right"] = nlohmann::json::array();
    auto& size = j["size"] = nlohmann::json::array();
    for (const auto& node : nodes) {
        feature.push_back(node.feature);
        split.push_back(node.split_value);
        left.push_back(node.left);
        right.push_back(node.right);
        size.push_back(node.size);
    }
    return j;
}

inline std::vector<IsolationNode> isolation_tree_from_json(const nlohmann::json& j) {
    const auto& feature = j.at("feature");
    const std::size_t n = feature.size();
    const auto& split = j.at("split_value");
    const auto& left = j.at("left");
    const auto& right = j.at("right");
    const auto& size = j.at("size");
    if (split.size() != n || left.size() != n || right.size() != n || size.size() != n)
        throw DataError("model file: isolation tree node arrays have mismatched lengths");
    std::vector<IsolationNode> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].feature = feature[i].get<std::int32_t>();
        nodes[i].split_value = split[i].get<double>();
        nodes[i].left = left[i].get<std::int32_t>();
        nodes[i].right = right[i].get<std::int32_t>();
        nodes[i].size = size[i].get<std::int32_t>();
    }
    return nodes;
}

inline nlohmann::json thresholds_to_json(const ThresholdSet& thresholds) {
    nlohmann::json j;
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        j[kSensorNames[s]] = {{"fixed", thresholds.sensors[s].fixed_limit},
                              {"adaptive", thresholds.sensors[s].adaptive_limit}};
    }
    return j;
}

inline ThresholdSet thresholds_from_json(const nlohmann::json& j) {
    ThresholdSet thresholds;
    for (std::size_t s = 0; s < kSensorCount; ++s) {
        const auto& entry = j.at(kSensorNames[s]);
        thresholds.sensors[s].fixed_limit = entry.at("fixed").get<double>();
        thresholds.sensors[s].adaptive_limit = entry.at("adaptive").get<double>();
    }
    return thresholds;
}

inline nlohmann::json logistic_to_json(const LogisticModel& model) {
    return {{"weights", model.weights},
            {"bias", model.bias},
            {"feature_mean", model.feature_mean},
            {"feature_scale", model.feature_scale},
            {"feature_names", model.feature_names},
            {"config",
             {{"l2", model.config.l2},
              {"epochs", model.config.epochs},
              {"learning_rate", model.config.learning_rate}}}};
}

inline LogisticModel logistic_from_json(const nlohmann::json& j) {
    LogisticModel model;
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    model.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    model.feature_scale = j.at("feature_scale").get<std::vector<double>>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& config = j.at("config");
    model.config.l2 = config.at("l2").get<double>();
    model.config.epochs = config.at("epochs").get<int>();
    model.config.learning_rate = config.at("learning_rate").get<double>();
    return model;
}

inline nlohmann::json isolation_to_json(const IsolationModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) trees.push_back(isolation_tree_to_json(tree));
    return {{"trees", std::move(trees)},
            {"config",
             {{"n_trees", model.config.n_trees},
              {"subsample", model.config.subsample},
              {"seed", model.config.seed}}},
            {"effective_subsample", model.effective_subsample},
            {"threshold", model.threshold},
            {"feature_names", model.feature_names}};
}

inline IsolationModel isolation_from_json(const nlohmann::json& j) {
    IsolationModel model;
    for (const auto& tree : j.at("trees")) model.trees.push_back(isolation_tree_from_json(tree));
    const auto& config = j.at("config");
    model.config.n_trees = config.at("n_trees").get<int>();
    model.config.subsample = config.at("subsample").get<int>();
    model.config.seed = config.at("seed").get<std::uint64_t>();
    model.effective_subsample = j.at("effective_subsample").get<std::size_t>();
    model.threshold = j.at("threshold").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    return model;
}

}  // namespace detail

inline nlohmann::json model_to_json(const AnyModel& model) {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
        j["kind"] = "forest";
        j["config"] = {{"n_trees", forest->config.n_trees},
                       {"max_depth", forest->config.max_depth},
                       {"min_samples_leaf", forest->config.min_samples_leaf},
                       {"features_per_split", forest->config.features_per_split},
                       {"bootstrap", forest->config.bootstrap},
                       {"seed", forest->config.seed}};
        j["feature_names"] = forest->feature_names;
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : forest->trees) trees.push_back(detail::tree_to_json(tree));
        j["trees"] = std::move(trees);
        return j;
    }
    if (const auto* boosted = std::get_if<BoostedModel>(&model)) {
        j["kind"] = "boosted";
        j["config"] = {{"rounds", boosted->config.rounds},
                       {"learning_rate", boosted->config.learning_rate},
                       {"max_depth", boosted->config.max_depth},
                       {"min_samples_leaf", boosted->config.min_samples_leaf},
                       {"lambda", boosted->config.lambda},
                       {"gamma", boosted->config.gamma}};
        j["base_score"] = boosted->base_score;
        j["feature_names"] = boosted->feature_names;
        j["training_loss"] = boosted->training_loss;
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : boosted->trees) trees.push_back(detail::tree_to_json(tree));
        j["trees"] = std::move(trees);
        return j;
    }
    const auto& baseline = std::get<BaselineModel>(model);
    j["kind"] = "baseline";
    j["variant"] = baseline_name(baseline.kind);
    if (baseline.thresholds) j["thresholds"] = detail::thresholds_to_json(*baseline.thresholds);
    if (baseline.logistic) j["logistic"] = detail::logistic_to_json(*baseline.logistic);
    if (baseline.isolation) j["isolation"] = detail::isolation_to_json(*baseline.isolation);
    return j;
}

inline AnyModel model_from_json(const nlohmann::json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw DataError("unsupported model format version " + std::to_string(version));
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "forest") {
        ForestModel model;
        const auto& config = j.at("config");
        model.config.n_trees = config.at("n_trees").get<int>();
        model.config.max_depth = config.at("max_depth").get<int>();
        model.config.min_samples_leaf = config.at("min_samples_leaf").get<int>();
        model.config.features_per_split = config.at("features_per_split").get<int>();
        model.config.bootstrap = config.at("bootstrap").get<bool>();
        model.config.seed = config.at("seed").get<std::uint64_t>();
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& tree : j.at("trees")) model.trees.push_back(detail::tree_from_json(tree));
        return model;
    }
    if (kind == "boosted") {
        BoostedModel model;
        const auto& config = j.at("config");
        model.config.rounds = config.at("rounds").get<int>();
        model.config.learning_rate = config.at("learning_rate").get<double>();
        model.config.max_depth = config.at("max_depth").get<int>();
        model.config.min_samples_leaf = config.at("min_samples_leaf").get<int>();
        model.config.lambda = config.at("lambda").get<double>();
        model.config.gamma = config.at("gamma").get<double>();
        model.base_score = j.at("base_score").get<double>();
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.training_loss = j.at("training_loss").get<std::vector<double>>();
        for (const auto& tree : j.at("trees")) model.trees.push_back(detail::tree_from_json(tree));
        return model;
    }
    if (kind == "baseline") {
        BaselineModel model;
        const auto variant = baseline_from_name(j.at("variant").get<std::string>());
        if (!variant) throw DataError("model file: unknown baseline variant");
        model.kind = *variant;
        if (j.contains("thresholds"))
            model.thresholds = detail::thresholds_from_json(j.at("thresholds"));
        if (j.contains("logistic")) model.logistic = detail::logistic_from_json(j.at("logistic"));
        if (j.contains("isolation"))
            model.isolation = detail::isolation_from_json(j.at("isolation"));
        return model;
    }
    throw DataError("model file: unknown model kind '" + kind + "'");
}

// Compact dump: a forest serializes to tens of megabytes pretty-printed.
inline void save_model(const AnyModel& model, const std::string& path) {
    write_file(path, model_to_json(model).dump() + "\n");
}

inline AnyModel load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
}

}  // namespace pumpcast
