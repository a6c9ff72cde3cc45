#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "jslight/url.hpp"

namespace jslight {

struct ScriptTag {
    std::string src;      // raw attribute value, entity-decoded; empty for inline
    bool has_src = false;
    std::string type;     // raw type attribute, lowercased
    std::string body;     // inline text (empty when has_src)
};

// Every <script> element in document order. Skips HTML comments; scans
// malformed markup best-effort.
std::vector<ScriptTag> scan_script_tags(std::string_view html);

// External script references resolved against `base_url` (or the first
// <base href>), document order, duplicates removed. References that cannot
// be resolved to an http(s) URL are dropped.
std::vector<std::string> extract_script_urls(std::string_view html, const Url& base_url);
std::vector<std::string> extract_script_urls(std::string_view html, std::string_view base_url);

// Bodies of inline classic/module scripts (data blocks such as JSON-LD are
// skipped), document order.
std::vector<std::string> extract_inline_scripts(std::string_view html);

}  // namespace jslight
