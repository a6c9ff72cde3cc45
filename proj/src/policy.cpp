#include "jslight/policy.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jslight/error.hpp"

namespace jslight {

std::string_view to_string(Criticality c) { return c == Criticality::critical ? "critical" : "noncritical"; }

void Policy::add_override(std::string page_origin, Category category) {
    per_page_overrides[std::move(page_origin)].insert(category);
}

Criticality decide_criticality(Category category, const Policy& policy, std::optional<std::string_view> page_origin) {
    if (!is_assigned(category)) return Criticality::critical;
    if (!policy.noncritical.contains(category)) return Criticality::critical;
    if (page_origin) {
        if (auto it = policy.per_page_overrides.find(std::string(*page_origin));
            it != policy.per_page_overrides.end() && it->second.contains(category)) {
            return Criticality::critical;
        }
    }
    return Criticality::noncritical;
}

namespace {

std::set<Category> categories_from(const nlohmann::json& arr, bool allow_unassigned) {
    if (!arr.is_array()) throw Error("policy category list must be an array");
    std::set<Category> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw Error("policy categories must be strings");
        const auto c = category_from_string(v.get<std::string>());
        if (!is_assigned(c) && !allow_unassigned) throw Error("\"unassigned\" can never be non-critical");
        out.insert(c);
    }
    return out;
}

}  // namespace

Policy policy_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed policy: ") + e.what());
    }
    if (!j.is_object()) throw Error("policy must be a JSON object");
    Policy p;
    if (j.contains("noncritical")) p.noncritical = categories_from(j["noncritical"], false);
    if (j.contains("overrides")) {
        if (!j["overrides"].is_object()) throw Error("policy overrides must be an object");
        for (const auto& [origin, cats] : j["overrides"].items()) {
            p.per_page_overrides[origin] = categories_from(cats, true);
        }
    }
    return p;
}

std::string policy_to_json(const Policy& policy) {
    nlohmann::ordered_json j;
    j["noncritical"] = nlohmann::ordered_json::array();
    for (auto c : policy.noncritical) j["noncritical"].push_back(std::string(to_string(c)));
    j["overrides"] = nlohmann::ordered_json::object();
    for (const auto& [origin, cats] : policy.per_page_overrides) {
        auto& arr = j["overrides"][origin] = nlohmann::ordered_json::array();
        for (auto c : cats) arr.push_back(std::string(to_string(c)));
    }
    return j.dump();
}

Policy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open policy file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return policy_from_json(buf.str());
}

}  // namespace jslight
