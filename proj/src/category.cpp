#include "jslight/category.hpp"

#include <string>

#include "jslight/error.hpp"

namespace jslight {

namespace {

constexpr std::array<std::string_view, kCategoryCount + 1> kNames = {
    "advertising", "analytics", "social",  "video",     "customer_success",
    "utility",     "hosting",   "content", "unassigned",
};

}  // namespace

std::string_view to_string(Category c) {
    return kNames.at(static_cast<std::size_t>(c));
}

std::optional<Category> parse_category(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<Category>(i);
    }
    return std::nullopt;
}

Category category_from_string(std::string_view name) {
    if (auto c = parse_category(name)) return *c;
    throw Error("unknown category \"" + std::string(name) + "\"");
}

Category category_from_index(std::size_t i) {
    if (i >= kCategoryCount) throw Error("category index out of range: " + std::to_string(i));
    return static_cast<Category>(i);
}

}  // namespace jslight
