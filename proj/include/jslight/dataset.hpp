#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jslight/category.hpp"
#include "jslight/features.hpp"

namespace jslight {

struct LabeledRow {
    std::string key;
    FeatureVector features;
    Category label = Category::unassigned;
};

struct LabeledDataset {
    std::vector<LabeledRow> rows;
    std::string vocab_version;
    std::uint64_t split_seed = 0;

    bool empty() const { return rows.empty(); }
    std::size_t size() const { return rows.size(); }
    std::map<Category, std::size_t> category_counts() const;
};

// Labeled rows of a feature-matrix file; unlabeled rows are dropped.
// Throws jslight::Error when rows disagree on vocab_version or length.
LabeledDataset dataset_from_rows(const std::vector<FeatureRow>& rows);

std::vector<FeatureRow> dataset_to_rows(const LabeledDataset& ds);

// Re-expresses every row in the `to` vocabulary by name.
LabeledDataset project_dataset(const LabeledDataset& ds, const Vocabulary& from, const Vocabulary& to);

struct DatasetSplit {
    LabeledDataset train;
    LabeledDataset holdout;
};

// Seeded shuffle, stratified by category: each category contributes
// floor(holdout_fraction * n_c) rows to the holdout side.
DatasetSplit stratified_split(const LabeledDataset& ds, double holdout_fraction, std::uint64_t seed);

}  // namespace jslight
