#include "jslight/html_scan.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "jslight/error.hpp"

namespace jslight {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
    }
    return true;
}

std::size_t find_ci(std::string_view s, std::size_t pos, std::string_view needle) {
    for (std::size_t i = pos; i + needle.size() <= s.size(); ++i) {
        if (starts_with_ci(s, i, needle)) return i;
    }
    return std::string_view::npos;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes the character references that show up in attribute values.
std::string decode_entities(std::string_view s) {
    static constexpr std::array<std::pair<std::string_view, char>, 5> kNamed = {{
        {"amp;", '&'}, {"quot;", '"'}, {"apos;", '\''}, {"lt;", '<'}, {"gt;", '>'},
    }};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const auto rest = s.substr(i + 1);
        bool done = false;
        for (const auto& [name, ch] : kNamed) {
            if (rest.starts_with(name)) {
                out.push_back(ch);
                i += name.size();
                done = true;
                break;
            }
        }
        if (done) continue;
        if (rest.starts_with('#')) {
            const bool hex = rest.size() > 1 && (rest[1] == 'x' || rest[1] == 'X');
            std::size_t j = hex ? 2 : 1;
            unsigned long cp = 0;
            const std::size_t digits_start = j;
            while (j < rest.size() && (hex ? std::isxdigit(static_cast<unsigned char>(rest[j]))
                                           : std::isdigit(static_cast<unsigned char>(rest[j])))) {
                cp = cp * (hex ? 16 : 10) +
                     static_cast<unsigned long>(std::isdigit(static_cast<unsigned char>(rest[j]))
                                                    ? rest[j] - '0'
                                                    : std::tolower(static_cast<unsigned char>(rest[j])) - 'a' + 10);
                if (cp > 0x10FFFF) cp = 0x110000;
                ++j;
            }
            if (j > digits_start) {
                append_utf8(out, cp);
                i += j + (j < rest.size() && rest[j] == ';' ? 1 : 0);
                continue;
            }
        }
        out.push_back('&');
    }
    return out;
}

struct Tag {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::size_t end = 0;  // index just past '>'
};

// Parses the tag starting at html[pos] == '<'. Returns nullopt on a
// non-tag '<'.
std::optional<Tag> parse_tag(std::string_view html, std::size_t pos) {
    std::size_t i = pos + 1;
    if (i < html.size() && html[i] == '/') ++i;
    if (i >= html.size() || !std::isalpha(static_cast<unsigned char>(html[i]))) return std::nullopt;
    Tag tag;
    const std::size_t name_start = i;
    while (i < html.size() && !is_space(html[i]) && html[i] != '>' && html[i] != '/') ++i;
    tag.name = lower(html.substr(name_start, i - name_start));

    while (i < html.size()) {
        while (i < html.size() && (is_space(html[i]) || html[i] == '/')) ++i;
        if (i >= html.size()) break;
        if (html[i] == '>') {
            tag.end = i + 1;
            return tag;
        }
        const std::size_t an = i;
        while (i < html.size() && !is_space(html[i]) && html[i] != '>' && html[i] != '=' && html[i] != '/') ++i;
        std::string attr = lower(html.substr(an, i - an));
        while (i < html.size() && is_space(html[i])) ++i;
        std::string value;
        if (i < html.size() && html[i] == '=') {
            ++i;
            while (i < html.size() && is_space(html[i])) ++i;
            if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
                const char q = html[i++];
                const std::size_t vs = i;
                while (i < html.size() && html[i] != q) ++i;
                value = decode_entities(html.substr(vs, i - vs));
                if (i < html.size()) ++i;
            } else {
                const std::size_t vs = i;
                while (i < html.size() && !is_space(html[i]) && html[i] != '>') ++i;
                value = decode_entities(html.substr(vs, i - vs));
            }
        }
        if (attr.empty()) {
            ++i;
            continue;
        }
        tag.attrs.emplace_back(std::move(attr), std::move(value));
    }
    tag.end = html.size();
    return tag;
}

const std::string* find_attr(const Tag& tag, std::string_view name) {
    for (const auto& [k, v] : tag.attrs) {
        if (k == name) return &v;
    }
    return nullptr;
}

bool is_javascript_type(std::string_view type) {
    static constexpr std::array<std::string_view, 9> kJs = {
        "",
        "text/javascript",
        "application/javascript",
        "module",
        "text/ecmascript",
        "application/ecmascript",
        "application/x-javascript",
        "text/jscript",
        "text/x-javascript",
    };
    const auto semi = type.find(';');
    auto t = type.substr(0, semi);
    while (!t.empty() && is_space(t.back())) t.remove_suffix(1);
    while (!t.empty() && is_space(t.front())) t.remove_prefix(1);
    return std::find(kJs.begin(), kJs.end(), t) != kJs.end();
}

struct ScanResult {
    std::vector<ScriptTag> scripts;
    std::optional<std::string> base_href;
};

ScanResult scan(std::string_view html) {
    ScanResult res;
    std::size_t i = 0;
    while (i < html.size()) {
        const auto lt = html.find('<', i);
        if (lt == std::string_view::npos) break;
        if (html.substr(lt).starts_with("<!--")) {
            const auto end = html.find("-->", lt + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        auto tag = parse_tag(html, lt);
        if (!tag) {
            i = lt + 1;
            continue;
        }
        i = tag->end;
        const bool closing = lt + 1 < html.size() && html[lt + 1] == '/';
        if (closing) continue;
        if (tag->name == "base" && !res.base_href) {
            if (const auto* href = find_attr(*tag, "href")) res.base_href = *href;
            continue;
        }
        if (tag->name != "script") continue;

        ScriptTag st;
        if (const auto* src = find_attr(*tag, "src")) {
            st.has_src = true;
            st.src = *src;
        }
        if (const auto* type = find_attr(*tag, "type")) st.type = lower(*type);
        const auto close = find_ci(html, i, "</script");
        const auto body_end = close == std::string_view::npos ? html.size() : close;
        if (!st.has_src) st.body = std::string(html.substr(i, body_end - i));
        if (close == std::string_view::npos) {
            i = html.size();
        } else {
            const auto gt = html.find('>', close);
            i = gt == std::string_view::npos ? html.size() : gt + 1;
        }
        res.scripts.push_back(std::move(st));
    }
    return res;
}

}  // namespace

std::vector<ScriptTag> scan_script_tags(std::string_view html) { return scan(html).scripts; }

std::vector<std::string> extract_script_urls(std::string_view html, const Url& base_url) {
    const auto res = scan(html);
    Url base = base_url;
    if (res.base_href) {
        if (auto b = resolve_url(base_url, *res.base_href)) base = *b;
    }
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& st : res.scripts) {
        if (!st.has_src || st.src.find_first_not_of(" \t\r\n\f") == std::string::npos) continue;
        auto resolved = resolve_url(base, st.src);
        if (!resolved || (resolved->scheme != "http" && resolved->scheme != "https") || resolved->host.empty()) {
            continue;
        }
        resolved->fragment.reset();
        auto s = resolved->to_string();
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::string> extract_script_urls(std::string_view html, std::string_view base_url) {
    auto base = parse_url(base_url);
    if (!base) throw Error("base URL is not absolute: " + std::string(base_url));
    return extract_script_urls(html, *base);
}

std::vector<std::string> extract_inline_scripts(std::string_view html) {
    std::vector<std::string> out;
    for (auto& st : scan(html).scripts) {
        if (!st.has_src && is_javascript_type(st.type)) out.push_back(std::move(st.body));
    }
    return out;
}

}  // namespace jslight
