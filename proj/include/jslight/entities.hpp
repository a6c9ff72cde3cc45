#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jslight/category.hpp"

namespace jslight {

// A known third-party provider and the domain suffixes it serves from.
struct Entity {
    std::string name;
    std::vector<std::string> domains;
    Category category = Category::unassigned;
};

// Read-only after construction. Each domain suffix maps to exactly one
// entity; when two entities claim the same suffix the first one wins and
// the conflict is counted and logged.
class EntityRepository {
public:
    EntityRepository() = default;
    // Throws jslight::Error when an entity has no domains or no category.
    explicit EntityRepository(std::vector<Entity> entities);

    const std::vector<Entity>& entities() const { return entities_; }
    std::size_t size() const { return entities_.size(); }
    std::size_t suffix_conflicts() const { return conflicts_; }

    // Entity with the longest label-aligned suffix of `host`, if any.
    const Entity* match_host(std::string_view host) const;

    // Upstream categories that did not translate, with their counts.
    std::map<std::string, std::size_t> skipped;

private:
    std::vector<Entity> entities_;
    std::unordered_map<std::string, std::size_t> suffix_index_;
    std::size_t conflicts_ = 0;
};

// Upstream (third-party-web) category string -> our category. "ad" and
// "advertising" map to advertising, "customer-success" to customer_success;
// the other six are identical. Anything else is nullopt.
std::optional<Category> translate_entity_category(std::string_view upstream);

// Parses a JSON array of {"name", "domains", "category"}. Records whose
// category does not translate are skipped and tallied in `skipped`.
// Throws jslight::Error on malformed JSON or a malformed record.
EntityRepository parse_entities(std::string_view json_text);

// Throws jslight::Error when the file cannot be read.
EntityRepository load_entities(const std::filesystem::path& path);

// Lowercased hostname of `url`; entity matching is suffix-based, so no
// public-suffix reduction happens here. Throws when there is no hostname.
std::string registrable_domain(std::string_view url);

struct EntityMatch {
    Entity entity;
    Category category = Category::unassigned;
};

// Longest label-aligned suffix match of the URL's hostname. URLs without a
// hostname never match.
std::optional<EntityMatch> match_entity(std::string_view url, const EntityRepository& repo);

}  // namespace jslight
