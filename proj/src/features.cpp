#include "jslight/features.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "jslight/error.hpp"
#include "jslight/tokenizer.hpp"

namespace jslight {

using nlohmann::json;

FeatureVector extract_features(std::string_view source, const Vocabulary& vocab) {
    FeatureVector v{std::vector<std::uint32_t>(vocab.size(), 0), vocab.version()};
    for (const auto& token : tokenize(source)) {
        if (auto i = vocab.index_of(token)) ++v.counts[*i];
    }
    return v;
}

FeatureVector project_features(const FeatureVector& v, const Vocabulary& from, const Vocabulary& to) {
    if (v.counts.size() != from.size()) {
        throw Error("feature vector length " + std::to_string(v.counts.size()) +
                    " does not match vocabulary size " + std::to_string(from.size()));
    }
    FeatureVector out{std::vector<std::uint32_t>(to.size(), 0), to.version()};
    for (std::size_t i = 0; i < to.size(); ++i) {
        if (auto j = from.index_of(to.names()[i])) out.counts[i] = v.counts[*j];
    }
    return out;
}

std::string feature_row_to_json(const FeatureRow& row) {
    json j;
    j["key"] = row.key;
    j["label"] = row.label ? json(std::string(to_string(*row.label))) : json(nullptr);
    j["counts"] = row.features.counts;
    j["vocab_version"] = row.features.vocab_version;
    return j.dump();
}

FeatureRow feature_row_from_json(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed feature row: ") + e.what());
    }
    if (!j.is_object() || !j.contains("key") || !j.contains("counts") || !j.contains("vocab_version")) {
        throw Error("feature row is missing key, counts or vocab_version");
    }
    FeatureRow row;
    try {
        row.key = j.at("key").get<std::string>();
        row.features.vocab_version = j.at("vocab_version").get<std::string>();
        for (const auto& c : j.at("counts")) {
            if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0)) {
                throw Error("feature counts must be nonnegative integers");
            }
            row.features.counts.push_back(c.get<std::uint32_t>());
        }
        if (j.contains("label") && !j.at("label").is_null()) {
            const auto c = category_from_string(j.at("label").get<std::string>());
            if (!is_assigned(c)) throw Error("\"unassigned\" is not a training label");
            row.label = c;
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed feature row: ") + e.what());
    }
    return row;
}

void write_feature_rows(std::ostream& out, const std::vector<FeatureRow>& rows) {
    for (const auto& r : rows) out << feature_row_to_json(r) << '\n';
}

std::vector<FeatureRow> read_feature_rows(std::istream& in) {
    std::vector<FeatureRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(feature_row_from_json(line));
        } catch (const Error& e) {
            throw Error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace jslight
