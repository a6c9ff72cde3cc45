#include "jslight/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "jslight/error.hpp"

namespace jslight {

std::map<Category, std::size_t> LabeledDataset::category_counts() const {
    std::map<Category, std::size_t> counts;
    for (const auto& r : rows) ++counts[r.label];
    return counts;
}

LabeledDataset dataset_from_rows(const std::vector<FeatureRow>& rows) {
    LabeledDataset ds;
    std::optional<std::size_t> width;
    for (const auto& r : rows) {
        if (!r.label) continue;
        if (ds.rows.empty()) {
            ds.vocab_version = r.features.vocab_version;
            width = r.features.counts.size();
        } else if (r.features.vocab_version != ds.vocab_version || r.features.counts.size() != *width) {
            throw Error("row \"" + r.key + "\" does not match the dataset vocabulary " + ds.vocab_version);
        }
        ds.rows.push_back({r.key, r.features, *r.label});
    }
    return ds;
}

std::vector<FeatureRow> dataset_to_rows(const LabeledDataset& ds) {
    std::vector<FeatureRow> out;
    out.reserve(ds.rows.size());
    for (const auto& r : ds.rows) out.push_back({r.key, r.label, r.features});
    return out;
}

LabeledDataset project_dataset(const LabeledDataset& ds, const Vocabulary& from, const Vocabulary& to) {
    LabeledDataset out;
    out.vocab_version = to.version();
    out.split_seed = ds.split_seed;
    out.rows.reserve(ds.rows.size());
    for (const auto& r : ds.rows) {
        out.rows.push_back({r.key, project_features(r.features, from, to), r.label});
    }
    return out;
}

DatasetSplit stratified_split(const LabeledDataset& ds, double holdout_fraction, std::uint64_t seed) {
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
        throw Error("holdout fraction must be in [0, 1)");
    }
    std::array<std::vector<std::size_t>, kCategoryCount> by_class;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const auto c = ds.rows[i].label;
        if (!is_assigned(c)) throw Error("dataset row \"" + ds.rows[i].key + "\" is unassigned");
        by_class[index_of(c)].push_back(i);
    }
    std::mt19937_64 rng(seed);
    DatasetSplit split;
    for (auto* part : {&split.train, &split.holdout}) {
        part->vocab_version = ds.vocab_version;
        part->split_seed = seed;
    }
    for (auto& idx : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_holdout = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < n_holdout ? split.holdout : split.train).rows.push_back(ds.rows[idx[k]]);
        }
    }
    return split;
}

}  // namespace jslight
