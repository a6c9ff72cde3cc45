#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "jslight/category.hpp"

namespace jslight {

enum class Criticality { critical, noncritical };

std::string_view to_string(Criticality c);

// Which categories may be blocked, with per-page exceptions. Unassigned is
// never blockable.
struct Policy {
    std::set<Category> noncritical{Category::advertising, Category::analytics};
    // page origin ("scheme://host[:port]") -> categories treated as critical there
    std::map<std::string, std::set<Category>> per_page_overrides;

    static Policy defaults() { return {}; }
    static Policy allow_all() { return Policy{{}, {}}; }

    // Re-enables `category` on `page_origin`.
    void add_override(std::string page_origin, Category category);
};

// unassigned -> critical always. Otherwise noncritical iff the category is
// in policy.noncritical and not re-enabled for page_origin.
Criticality decide_criticality(Category category, const Policy& policy,
                               std::optional<std::string_view> page_origin = std::nullopt);

// {"noncritical": [..], "overrides": {"<origin>": [..]}}; a missing
// "noncritical" keeps the default set. Throws jslight::Error on unknown
// categories or on "unassigned" in the noncritical set.
Policy policy_from_json(std::string_view text);
std::string policy_to_json(const Policy& policy);
Policy load_policy(const std::filesystem::path& path);

}  // namespace jslight
