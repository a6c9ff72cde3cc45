#include "jslight/vocabulary.hpp"

#include <fstream>
#include <sstream>

#include "jslight/digest.hpp"
#include "jslight/error.hpp"

namespace jslight {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<std::string> header_value(std::string_view comment, std::string_view key) {
    comment.remove_prefix(1);  // '#'
    comment = trim(comment);
    if (!comment.starts_with(key)) return std::nullopt;
    comment.remove_prefix(key.size());
    comment = trim(comment);
    if (!comment.starts_with(':')) return std::nullopt;
    comment.remove_prefix(1);
    return std::string(trim(comment));
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> names, std::string version,
                       std::optional<std::string> selected_from)
    : names_(std::move(names)), version_(std::move(version)), selected_from_(std::move(selected_from)) {
    if (names_.empty()) throw Error("vocabulary must not be empty");
    index_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second) {
            throw Error("duplicate vocabulary name \"" + names_[i] + "\"");
        }
    }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary Vocabulary::subset(std::span<const std::size_t> positions, std::string version) const {
    std::vector<bool> keep(names_.size(), false);
    for (auto p : positions) keep.at(p) = true;
    std::vector<std::string> out;
    out.reserve(positions.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (keep[i]) out.push_back(names_[i]);
    }
    return Vocabulary(std::move(out), std::move(version), version_);
}

Vocabulary parse_api_catalog(std::string_view text) {
    std::vector<std::string> names;
    std::optional<std::string> version;
    std::optional<std::string> selected_from;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (auto v = header_value(line, "version")) version = std::move(v);
            if (auto v = header_value(line, "selected_from")) selected_from = std::move(v);
            continue;
        }
        names.emplace_back(line);
    }
    if (!version) {
        std::string joined;
        for (const auto& n : names) joined += n + "\n";
        version = "catalog-" + sha256_hex(joined).substr(0, 12);
    }
    return Vocabulary(std::move(names), std::move(*version), std::move(selected_from));
}

Vocabulary load_api_catalog(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open API catalog " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_api_catalog(buf.str());
}

void save_api_catalog(const Vocabulary& vocab, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write API catalog " + path.string());
    out << "# version: " << vocab.version() << "\n";
    if (vocab.selected_from()) out << "# selected_from: " << *vocab.selected_from() << "\n";
    for (const auto& n : vocab.names()) out << n << "\n";
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace jslight
