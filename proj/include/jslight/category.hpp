#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace jslight {

// The eight script categories, in their stable integer encoding 0..7.
// `unassigned` is the classifier's fallback and is never a training label.
enum class Category : std::uint8_t {
    advertising = 0,
    analytics = 1,
    social = 2,
    video = 3,
    customer_success = 4,
    utility = 5,
    hosting = 6,
    content = 7,
    unassigned = 8,
};

inline constexpr std::size_t kCategoryCount = 8;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::advertising, Category::analytics,        Category::social,
    Category::video,       Category::customer_success, Category::utility,
    Category::hosting,     Category::content,
};

constexpr std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

constexpr bool is_assigned(Category c) { return c != Category::unassigned; }

// Wire names: "advertising", ..., "customer_success", ..., "unassigned".
std::string_view to_string(Category c);

// Inverse of to_string; nullopt for anything else.
std::optional<Category> parse_category(std::string_view name);

// Throws jslight::Error for names that parse_category rejects.
Category category_from_string(std::string_view name);

// 0..7 -> category; throws on out-of-range.
Category category_from_index(std::size_t i);

}  // namespace jslight
