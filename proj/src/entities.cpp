#include "jslight/entities.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "jslight/error.hpp"
#include "jslight/url.hpp"

namespace jslight {

namespace {

std::string normalize_suffix(std::string_view d) {
    if (d.starts_with("*.")) d.remove_prefix(2);
    while (d.starts_with('.')) d.remove_prefix(1);
    while (d.ends_with('.')) d.remove_suffix(1);
    std::string out(d);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

EntityRepository::EntityRepository(std::vector<Entity> entities) : entities_(std::move(entities)) {
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        auto& e = entities_[i];
        if (e.domains.empty()) throw Error("entity \"" + e.name + "\" has no domains");
        if (!is_assigned(e.category)) throw Error("entity \"" + e.name + "\" has no category");
        for (auto& d : e.domains) {
            d = normalize_suffix(d);
            if (d.empty()) continue;
            auto [it, inserted] = suffix_index_.emplace(d, i);
            if (!inserted && it->second != i) {
                ++conflicts_;
                spdlog::debug("domain suffix {} claimed by both \"{}\" and \"{}\"; keeping the first", d,
                              entities_[it->second].name, e.name);
            }
        }
    }
}

const Entity* EntityRepository::match_host(std::string_view host) const {
    // Try the whole host, then drop one leading label at a time.
    while (!host.empty()) {
        if (auto it = suffix_index_.find(std::string(host)); it != suffix_index_.end()) {
            return &entities_[it->second];
        }
        const auto dot = host.find('.');
        if (dot == std::string_view::npos) break;
        host.remove_prefix(dot + 1);
    }
    return nullptr;
}

std::optional<Category> translate_entity_category(std::string_view upstream) {
    if (upstream == "ad" || upstream == "advertising") return Category::advertising;
    if (upstream == "customer-success" || upstream == "customer_success") return Category::customer_success;
    if (auto c = parse_category(upstream); c && is_assigned(*c)) return c;
    return std::nullopt;
}

EntityRepository parse_entities(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed entities file: ") + e.what());
    }
    if (!j.is_array()) throw Error("entities file must hold a JSON array");

    std::vector<Entity> entities;
    std::map<std::string, std::size_t> skipped;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& rec = j[i];
        if (!rec.is_object() || !rec.contains("name") || !rec.contains("domains") || !rec.contains("category") ||
            !rec["name"].is_string() || !rec["domains"].is_array() || !rec["category"].is_string()) {
            throw Error("malformed entity record at index " + std::to_string(i));
        }
        const auto upstream = rec["category"].get<std::string>();
        const auto category = translate_entity_category(upstream);
        if (!category) {
            ++skipped[upstream];
            continue;
        }
        Entity e{rec["name"].get<std::string>(), {}, *category};
        for (const auto& d : rec["domains"]) {
            if (!d.is_string()) throw Error("malformed domain in entity \"" + e.name + "\"");
            e.domains.push_back(d.get<std::string>());
        }
        if (e.domains.empty()) throw Error("entity \"" + e.name + "\" has no domains");
        entities.push_back(std::move(e));
    }
    std::size_t total_skipped = 0;
    for (const auto& [name, n] : skipped) total_skipped += n;
    if (total_skipped > 0) {
        spdlog::info("skipped {} entities with categories outside the eight", total_skipped);
    }
    EntityRepository repo(std::move(entities));
    repo.skipped = std::move(skipped);
    return repo;
}

EntityRepository load_entities(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open entities file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_entities(buf.str());
}

std::string registrable_domain(std::string_view url) { return url_hostname(url); }

std::optional<EntityMatch> match_entity(std::string_view url, const EntityRepository& repo) {
    auto parsed = parse_url(url);
    if (!parsed || parsed->host.empty()) return std::nullopt;
    std::string_view host = parsed->host;
    while (host.ends_with('.')) host.remove_suffix(1);
    if (const auto* e = repo.match_host(host)) return EntityMatch{*e, e->category};
    return std::nullopt;
}

}  // namespace jslight
