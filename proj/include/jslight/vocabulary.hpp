#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace jslight {

// Ordered, duplicate-free list of API token names. The order fixes the
// layout of every FeatureVector built against it.
class Vocabulary {
public:
    // Throws jslight::Error when `names` is empty or contains a duplicate.
    Vocabulary(std::vector<std::string> names, std::string version,
               std::optional<std::string> selected_from = std::nullopt);

    const std::vector<std::string>& names() const { return names_; }
    const std::string& version() const { return version_; }
    const std::optional<std::string>& selected_from() const { return selected_from_; }
    std::size_t size() const { return names_.size(); }

    std::optional<std::size_t> index_of(std::string_view name) const;

    // Keeps the names at `positions`, in their original relative order.
    Vocabulary subset(std::span<const std::size_t> positions, std::string version) const;

private:
    std::vector<std::string> names_;
    std::string version_;
    std::optional<std::string> selected_from_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Catalog text format: one name per line; blank lines and lines starting
// with '#' are ignored, except that "# version: X" and "# selected_from: Y"
// header comments set the corresponding fields. Without a version header
// the version is derived from a digest of the names.
Vocabulary parse_api_catalog(std::string_view text);

// Throws jslight::Error on a missing file or a duplicate name.
Vocabulary load_api_catalog(const std::filesystem::path& path);

void save_api_catalog(const Vocabulary& vocab, const std::filesystem::path& path);

}  // namespace jslight
