#include "jslight/url.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "jslight/error.hpp"

namespace jslight {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Browsers drop surrounding C0/space and embedded tab/newline characters.
std::string clean_reference(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && static_cast<unsigned char>(s[b]) <= 0x20) ++b;
    while (e > b && static_cast<unsigned char>(s[e - 1]) <= 0x20) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) {
        if (s[i] != '\t' && s[i] != '\n' && s[i] != '\r') out.push_back(s[i]);
    }
    return out;
}

struct Reference {
    std::optional<std::string> scheme;
    bool has_authority = false;
    std::string userinfo;
    std::string host;
    std::optional<int> port;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;
};

bool is_scheme_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

bool parse_authority(std::string_view auth, Reference& ref) {
    if (auto at = auth.rfind('@'); at != std::string_view::npos) {
        ref.userinfo = std::string(auth.substr(0, at));
        auth.remove_prefix(at + 1);
    }
    std::string_view host = auth;
    std::string_view port;
    if (!auth.empty() && auth.front() == '[') {
        auto close = auth.find(']');
        if (close == std::string_view::npos) return false;
        host = auth.substr(0, close + 1);
        auto rest = auth.substr(close + 1);
        if (!rest.empty()) {
            if (rest.front() != ':') return false;
            port = rest.substr(1);
        }
    } else if (auto colon = auth.rfind(':'); colon != std::string_view::npos) {
        host = auth.substr(0, colon);
        port = auth.substr(colon + 1);
    }
    if (!port.empty()) {
        if (port.size() > 5 || !std::all_of(port.begin(), port.end(),
                                            [](unsigned char c) { return std::isdigit(c); })) {
            return false;
        }
        const int p = std::stoi(std::string(port));
        if (p > 65535) return false;
        ref.port = p;
    }
    ref.host = lower(host);
    ref.has_authority = true;
    return true;
}

std::optional<Reference> parse_reference(std::string_view s) {
    Reference ref;
    // scheme
    if (!s.empty() && std::isalpha(static_cast<unsigned char>(s.front()))) {
        std::size_t i = 1;
        while (i < s.size() && is_scheme_char(s[i])) ++i;
        if (i < s.size() && s[i] == ':') {
            ref.scheme = lower(s.substr(0, i));
            s.remove_prefix(i + 1);
        }
    }
    if (auto hash = s.find('#'); hash != std::string_view::npos) {
        ref.fragment = std::string(s.substr(hash + 1));
        s = s.substr(0, hash);
    }
    if (auto q = s.find('?'); q != std::string_view::npos) {
        ref.query = std::string(s.substr(q + 1));
        s = s.substr(0, q);
    }
    if (s.starts_with("//")) {
        s.remove_prefix(2);
        const auto slash = s.find('/');
        const auto auth = s.substr(0, slash);
        if (!parse_authority(auth, ref)) return std::nullopt;
        s = slash == std::string_view::npos ? std::string_view{} : s.substr(slash);
    }
    ref.path = std::string(s);
    return ref;
}

std::string remove_dot_segments(std::string_view path) {
    std::vector<std::string_view> out;
    const bool absolute = path.starts_with('/');
    std::size_t pos = absolute ? 1 : 0;
    bool trailing_slash = false;
    while (pos <= path.size()) {
        auto next = path.find('/', pos);
        if (next == std::string_view::npos) next = path.size();
        const auto seg = path.substr(pos, next - pos);
        const bool last = next == path.size();
        if (seg == ".") {
            trailing_slash = last;
        } else if (seg == "..") {
            if (!out.empty()) out.pop_back();
            trailing_slash = last;
        } else {
            out.push_back(seg);
            trailing_slash = false;
        }
        pos = next + 1;
    }
    std::string result = absolute ? "/" : "";
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i > 0) result.push_back('/');
        result.append(out[i]);
    }
    if (trailing_slash && !result.ends_with('/')) result.push_back('/');
    return result;
}

Url to_url(Reference ref) {
    Url u;
    u.scheme = ref.scheme.value_or("");
    u.has_authority = ref.has_authority;
    u.userinfo = std::move(ref.userinfo);
    u.host = std::move(ref.host);
    u.port = ref.port;
    u.path = std::move(ref.path);
    u.query = std::move(ref.query);
    u.fragment = std::move(ref.fragment);
    return u;
}

}  // namespace

std::optional<int> Url::effective_port() const {
    if (port) return port;
    if (scheme == "http" || scheme == "ws") return 80;
    if (scheme == "https" || scheme == "wss") return 443;
    return std::nullopt;
}

std::string Url::origin() const {
    std::string out = scheme + "://" + host;
    const bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
    if (port && !default_port) out += ":" + std::to_string(*port);
    return out;
}

std::string Url::request_target() const {
    std::string out = path.empty() ? "/" : path;
    if (query) out += "?" + *query;
    return out;
}

std::string Url::to_string() const {
    std::string out = scheme + ":";
    if (has_authority) {
        out += "//";
        if (!userinfo.empty()) out += userinfo + "@";
        out += host;
        if (port) out += ":" + std::to_string(*port);
    }
    out += path;
    if (query) out += "?" + *query;
    if (fragment) out += "#" + *fragment;
    return out;
}

std::optional<Url> parse_url(std::string_view text) {
    auto ref = parse_reference(clean_reference(text));
    if (!ref || !ref->scheme) return std::nullopt;
    if (ref->has_authority && ref->path.empty() &&
        (ref->scheme == "http" || ref->scheme == "https")) {
        ref->path = "/";
    }
    if (ref->has_authority) ref->path = remove_dot_segments(ref->path);
    return to_url(std::move(*ref));
}

std::optional<Url> resolve_url(const Url& base, std::string_view reference) {
    if (base.scheme.empty()) return std::nullopt;
    auto ref = parse_reference(clean_reference(reference));
    if (!ref) return std::nullopt;

    Reference target;
    if (ref->scheme) {
        return parse_url(clean_reference(reference));
    }
    target.scheme = base.scheme;
    if (ref->has_authority) {
        target.has_authority = true;
        target.userinfo = ref->userinfo;
        target.host = ref->host;
        target.port = ref->port;
        target.path = remove_dot_segments(ref->path.empty() ? "/" : ref->path);
        target.query = ref->query;
    } else {
        target.has_authority = base.has_authority;
        target.userinfo = base.userinfo;
        target.host = base.host;
        target.port = base.port;
        if (ref->path.empty()) {
            target.path = base.path;
            target.query = ref->query ? ref->query : base.query;
        } else {
            if (ref->path.starts_with('/')) {
                target.path = remove_dot_segments(ref->path);
            } else {
                std::string merged;
                if (base.has_authority && base.path.empty()) {
                    merged = "/" + ref->path;
                } else {
                    const auto slash = base.path.rfind('/');
                    merged = (slash == std::string::npos ? std::string{} : base.path.substr(0, slash + 1)) +
                             ref->path;
                }
                target.path = remove_dot_segments(merged);
            }
            target.query = ref->query;
        }
    }
    target.fragment = ref->fragment;
    return to_url(std::move(target));
}

std::string url_hostname(std::string_view url) {
    auto parsed = parse_url(url);
    if (!parsed || !parsed->has_authority || parsed->host.empty()) {
        throw Error("URL has no hostname: " + std::string(url.substr(0, 120)));
    }
    return parsed->host;
}

std::optional<std::string> url_origin(std::string_view url) {
    auto parsed = parse_url(url);
    if (!parsed || !parsed->has_authority || parsed->host.empty()) return std::nullopt;
    return parsed->origin();
}

}  // namespace jslight
