#include "jslight/label_entry.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "jslight/error.hpp"
#include "jslight/url.hpp"

namespace jslight {

std::string inline_key(std::string_view content_hash) { return "hash:" + std::string(content_hash); }

std::string key_domain(std::string_view key) {
    if (key.starts_with("hash:")) return {};
    auto parsed = parse_url(key);
    if (!parsed || parsed->host.empty()) return {};
    return parsed->host;
}

std::string entry_to_jsonl(const LabelEntry& e) {
    nlohmann::ordered_json j;
    j["key"] = e.key;
    j["domain"] = e.domain;
    j["category"] = std::string(to_string(e.category));
    j["confidence"] = e.confidence;
    j["labeled_at"] = e.labeled_at;
    return j.dump();
}

LabelEntry entry_from_jsonl(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed label line: ") + e.what());
    }
    if (!j.is_object()) throw Error("label line is not an object");
    const auto need = [&](const char* field, auto check) {
        if (!j.contains(field) || !check(j[field])) throw Error(std::string("label line has a bad \"") + field + "\"");
    };
    need("key", [](const auto& v) { return v.is_string() && !v.template get<std::string>().empty(); });
    need("domain", [](const auto& v) { return v.is_string(); });
    need("category", [](const auto& v) { return v.is_string(); });
    need("confidence", [](const auto& v) { return v.is_number(); });
    need("labeled_at", [](const auto& v) { return v.is_number_integer(); });

    LabelEntry e;
    e.key = j["key"].get<std::string>();
    e.domain = j["domain"].get<std::string>();
    e.category = category_from_string(j["category"].get<std::string>());
    e.confidence = j["confidence"].get<double>();
    e.labeled_at = j["labeled_at"].get<std::int64_t>();
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) throw Error("label confidence outside [0, 1]");
    return e;
}

std::size_t entry_size_bytes(const LabelEntry& e) { return entry_to_jsonl(e).size() + 1; }

}  // namespace jslight
