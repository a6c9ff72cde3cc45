#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace jslight {

// Minimal RFC 3986 URL handling: enough to resolve script references and
// pull out hostnames. Hosts are stored lowercase; IPv6 literals keep their
// brackets.
struct Url {
    std::string scheme;     // lowercase, without ':'
    std::string userinfo;
    std::string host;
    std::optional<int> port;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;
    bool has_authority = false;

    // Port if explicit, else the scheme default (80/443), else nullopt.
    std::optional<int> effective_port() const;

    // "scheme://host[:port]" with default ports elided.
    std::string origin() const;

    // Path plus "?query"; "/" when the path is empty.
    std::string request_target() const;

    std::string to_string() const;
};

// Parses an absolute URL (must carry a scheme). Returns nullopt otherwise.
std::optional<Url> parse_url(std::string_view text);

// Resolves `reference` against an absolute `base`. Returns nullopt when the
// base is not absolute or the reference is unusable.
std::optional<Url> resolve_url(const Url& base, std::string_view reference);

// Lowercased hostname of an absolute URL. Throws jslight::Error when the URL
// does not parse or has no hostname (e.g. data: URLs).
std::string url_hostname(std::string_view url);

// Origin ("scheme://host[:port]") of an absolute URL; nullopt when there is
// no hostname.
std::optional<std::string> url_origin(std::string_view url);

}  // namespace jslight
