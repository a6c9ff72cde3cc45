#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "jslight/category.hpp"

namespace jslight {

struct LabelEntry {
    std::string key;     // exact script URL, or "hash:<digest>" for inline scripts
    std::string domain;  // lowercase hostname; empty for inline scripts
    Category category = Category::unassigned;
    double confidence = 0.0;
    std::int64_t labeled_at = 0;
    std::int64_t last_used = 0;
    // Set on entries synthesized from domain consensus; never stored.
    bool inferred = false;

    bool operator==(const LabelEntry&) const = default;
};

// Key for an inline script with the given content digest.
std::string inline_key(std::string_view content_hash);

// Hostname for a key: the URL's host, or "" for hash keys and non-URLs.
std::string key_domain(std::string_view key);

// Snapshot line, without trailing newline:
// {"key","domain","category","confidence","labeled_at"}
std::string entry_to_jsonl(const LabelEntry& e);

// Throws jslight::Error on malformed lines. last_used comes back as 0.
LabelEntry entry_from_jsonl(std::string_view line);

// Bytes the entry occupies in a JSONL snapshot, newline included. This is
// the unit of store capacity accounting.
std::size_t entry_size_bytes(const LabelEntry& e);

}  // namespace jslight
