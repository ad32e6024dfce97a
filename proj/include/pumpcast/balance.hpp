#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pumpcast/error.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/textio.hpp"

namespace pumpcast {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // minority:majority after synthesis
    std::uint64_t seed = 0;
    // Neighbor distances are computed on z-scored features by default; raw
    // sensor scales differ by orders of magnitude and would let one dimension
    // dominate the Euclidean metric. Interpolation always happens in raw
    // feature space.
    bool standardize = true;

    void validate() const {
        if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
        if (!(target_ratio > 0.0 && target_ratio <= 1.0))
            throw ConfigError("target_ratio must lie in (0, 1]");
    }
};

// One synthetic sample: parents are indices into the input dataset, u is the
// interpolation coefficient, synthetic_index is the row index in the output.
struct SmoteAuditEntry {
    std::size_t synthetic_index = 0;
    std::size_t parent_a = 0;
    std::size_t parent_b = 0;
    double u = 0.0;
};

struct SmoteResult {
    LabeledDataset dataset;
    std::vector<SmoteAuditEntry> audit;
};

// Oversamples the minority class by interpolating between each picked minority
// sample and one of its k nearest minority neighbors. Originals are retained;
// synthetics carry no anchor timestamp and are flagged.
inline SmoteResult smote(const LabeledDataset& train, const SmoteConfig& config) {
    config.validate();
    if (train.tag == SplitTag::Test)
        throw AppliedToTestSplit("smote must never touch the test split");

    std::vector<std::size_t> minority_idx, majority_idx;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train.samples[i].label == BinaryLabel::Positive)
            minority_idx.push_back(i);
        else
            majority_idx.push_back(i);
    }
    BinaryLabel minority_label = BinaryLabel::Positive;
    if (minority_idx.size() > majority_idx.size()) {
        std::swap(minority_idx, majority_idx);
        minority_label = BinaryLabel::Negative;
    }

    SmoteResult result;
    result.dataset = train;

    const std::size_t want =
        static_cast<std::size_t>(std::llround(config.target_ratio *
                                              static_cast<double>(majority_idx.size())));
    if (minority_idx.size() >= want) return result;  // already balanced enough
    if (minority_idx.size() < 2)
        throw MinorityTooSmall("smote needs at least 2 minority samples");
    const std::size_t n_synth = want - minority_idx.size();

    const std::size_t dim = train.dimension();

    // Per-dimension scale for the neighbor metric (training statistics).
    std::vector<double> scale(dim, 1.0);
    if (config.standardize) {
        std::vector<double> mean(dim, 0.0);
        for (const auto& s : train.samples)
            for (std::size_t f = 0; f < dim; ++f) mean[f] += s.features[f];
        for (std::size_t f = 0; f < dim; ++f) mean[f] /= static_cast<double>(train.size());
        std::vector<double> var(dim, 0.0);
        for (const auto& s : train.samples)
            for (std::size_t f = 0; f < dim; ++f) {
                const double d = s.features[f] - mean[f];
                var[f] += d * d;
            }
        for (std::size_t f = 0; f < dim; ++f) {
            const double sd = std::sqrt(var[f] / static_cast<double>(train.size()));
            scale[f] = sd > 0.0 ? sd : 1.0;
        }
    }

    // k nearest minority neighbors per minority sample, ties broken by index.
    const std::size_t m = minority_idx.size();
    const std::size_t k = std::min(config.k_neighbors, m - 1);
    std::vector<std::vector<std::size_t>> neighbors(m);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < m; ++a) {
        dist.clear();
        const auto& fa = train.samples[minority_idx[a]].features;
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            const auto& fb = train.samples[minority_idx[b]].features;
            double d2 = 0.0;
            for (std::size_t f = 0; f < dim; ++f) {
                const double d = (fa[f] - fb[f]) / scale[f];
                d2 += d * d;
            }
            dist.emplace_back(d2, b);
        }
        std::sort(dist.begin(), dist.end());
        neighbors[a].reserve(k);
        for (std::size_t j = 0; j < k; ++j) neighbors[a].push_back(dist[j].second);
    }

    Rng rng(derive_seed(config.seed, hash_name("balance.smote")));
    result.dataset.samples.reserve(train.size() + n_synth);
    result.audit.reserve(n_synth);
    for (std::size_t i = 0; i < n_synth; ++i) {
        const std::size_t a = rng.uniform_index(m);
        const std::size_t b = neighbors[a][rng.uniform_index(neighbors[a].size())];
        const double u = rng.uniform();
        const std::size_t pa = minority_idx[a];
        const std::size_t pb = minority_idx[b];
        Sample synth;
        synth.features.resize(dim);
        const auto& fa = train.samples[pa].features;
        const auto& fb = train.samples[pb].features;
        for (std::size_t f = 0; f < dim; ++f) synth.features[f] = fa[f] + u * (fb[f] - fa[f]);
        synth.label = minority_label;
        synth.synthetic = true;
        result.audit.push_back({result.dataset.samples.size(), pa, pb, u});
        result.dataset.samples.push_back(std::move(synth));
    }
    return result;
}

inline std::string smote_audit_to_csv(const std::vector<SmoteAuditEntry>& audit) {
    std::string out = "synthetic_index,parent_a,parent_b,u\n";
    for (const auto& e : audit) {
        out += std::to_string(e.synthetic_index);
        out.push_back(',');
        out += std::to_string(e.parent_a);
        out.push_back(',');
        out += std::to_string(e.parent_b);
        out.push_back(',');
        out += format_double(e.u);
        out.push_back('\n');
    }
    return out;
}

}  // namespace pumpcast
