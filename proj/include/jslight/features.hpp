#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jslight/category.hpp"
#include "jslight/vocabulary.hpp"

namespace jslight {

// Per-name occurrence counts for one script, laid out by a Vocabulary.
struct FeatureVector {
    std::vector<std::uint32_t> counts;
    std::string vocab_version;

    bool operator==(const FeatureVector&) const = default;
};

// counts[i] = occurrences of vocab.names()[i] among tokenize(source).
FeatureVector extract_features(std::string_view source, const Vocabulary& vocab);

// Remaps a vector from one vocabulary to another by name. Names missing
// from `from` count zero.
FeatureVector project_features(const FeatureVector& v, const Vocabulary& from, const Vocabulary& to);

// One line of the feature-matrix export:
// {"key": string, "label": string|null, "counts": [ints], "vocab_version": string}
struct FeatureRow {
    std::string key;
    std::optional<Category> label;
    FeatureVector features;
};

std::string feature_row_to_json(const FeatureRow& row);

// Throws jslight::Error on malformed lines.
FeatureRow feature_row_from_json(std::string_view line);

void write_feature_rows(std::ostream& out, const std::vector<FeatureRow>& rows);

// Reads every non-blank line; throws on the first malformed one.
std::vector<FeatureRow> read_feature_rows(std::istream& in);

}  // namespace jslight
