#include "jslight/http_wire.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>

namespace jslight {

long SocketStream::read_some(char* buf, std::size_t len) {
    for (;;) {
        const auto n = ::recv(fd_, buf, len, 0);
        if (n < 0 && errno == EINTR) continue;
        return static_cast<long>(n);
    }
}

bool SocketStream::write_all(std::string_view data) {
    while (!data.empty()) {
        const auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

bool is_hop_by_hop(std::string_view name) {
    static constexpr std::array<std::string_view, 9> kHop = {
        "connection", "proxy-connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
        "te",         "trailer",          "transfer-encoding", "upgrade",
    };
    return std::any_of(kHop.begin(), kHop.end(), [&](std::string_view h) { return iequals(h, name); });
}

namespace {

std::optional<std::string> find_header(const HeaderList& headers, std::string_view name) {
    for (const auto& [k, v] : headers) {
        if (iequals(k, name)) return v;
    }
    return std::nullopt;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool is_token(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || std::string_view("!#$%&'*+-.^_`|~").find(static_cast<char>(c)) != std::string_view::npos;
    });
}

}  // namespace

std::optional<std::string> HttpRequest::header(std::string_view name) const { return find_header(headers, name); }

bool HttpRequest::keep_alive() const {
    const auto conn = header("Connection").value_or(header("Proxy-Connection").value_or(""));
    if (version == "HTTP/1.0") return iequals(trim(conn), "keep-alive");
    return !iequals(trim(conn), "close");
}

std::optional<std::string> HttpResponse::header(std::string_view name) const { return find_header(headers, name); }

std::string_view reason_phrase(int status) {
    switch (status) {
        case 200: return "OK";
        case 201: return "Created";
        case 204: return "No Content";
        case 206: return "Partial Content";
        case 301: return "Moved Permanently";
        case 302: return "Found";
        case 304: return "Not Modified";
        case 400: return "Bad Request";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 405: return "Method Not Allowed";
        case 411: return "Length Required";
        case 413: return "Payload Too Large";
        case 500: return "Internal Server Error";
        case 502: return "Bad Gateway";
        case 503: return "Service Unavailable";
        case 504: return "Gateway Timeout";
        default: return "Status";
    }
}

std::string HttpResponse::serialize(std::optional<std::size_t> content_length) const {
    std::string out = "HTTP/1.1 " + std::to_string(status) + " ";
    out += reason.empty() ? std::string(reason_phrase(status)) : reason;
    out += "\r\n";
    for (const auto& [k, v] : headers) {
        if (iequals(k, "Content-Length") || is_hop_by_hop(k)) continue;
        out += k + ": " + v + "\r\n";
    }
    out += "Content-Length: " + std::to_string(content_length.value_or(body.size())) + "\r\n\r\n";
    out += body;
    return out;
}

bool RequestReader::fill() {
    std::array<char, 16384> chunk{};
    const auto n = stream_.read_some(chunk.data(), chunk.size());
    if (n <= 0) return false;
    buf_.append(chunk.data(), static_cast<std::size_t>(n));
    return true;
}

std::string RequestReader::read_line() {
    for (;;) {
        if (auto nl = buf_.find('\n'); nl != std::string::npos) {
            std::string line = buf_.substr(0, nl);
            buf_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (buf_.size() > max_header_) throw HttpParseError("header line too long");
        if (!fill()) throw HttpParseError("connection closed mid-request");
    }
}

std::string RequestReader::read_exact(std::size_t n) {
    while (buf_.size() < n) {
        if (!fill()) throw HttpParseError("connection closed mid-body");
    }
    std::string out = buf_.substr(0, n);
    buf_.erase(0, n);
    return out;
}

std::optional<HttpRequest> RequestReader::next() {
    // Skip stray CRLFs between pipelined requests.
    for (;;) {
        while (!buf_.empty() && (buf_.front() == '\r' || buf_.front() == '\n')) buf_.erase(0, 1);
        if (!buf_.empty()) break;
        if (!fill()) return std::nullopt;
    }

    HttpRequest req;
    const std::string line = read_line();
    const auto sp1 = line.find(' ');
    const auto sp2 = line.rfind(' ');
    if (sp1 == std::string::npos || sp2 == sp1) throw HttpParseError("malformed request line");
    req.method = line.substr(0, sp1);
    req.target = line.substr(sp1 + 1, sp2 - sp1 - 1);
    req.version = line.substr(sp2 + 1);
    if (!is_token(req.method) || req.target.empty() || req.target.find(' ') != std::string::npos ||
        (req.version != "HTTP/1.1" && req.version != "HTTP/1.0")) {
        throw HttpParseError("malformed request line");
    }

    std::size_t header_bytes = line.size();
    for (;;) {
        const std::string h = read_line();
        if (h.empty()) break;
        header_bytes += h.size();
        if (header_bytes > max_header_) throw HttpParseError("request headers too large");
        const auto colon = h.find(':');
        if (colon == std::string::npos || colon == 0) throw HttpParseError("malformed header line");
        const auto name = std::string_view(h).substr(0, colon);
        if (!is_token(name)) throw HttpParseError("malformed header name");
        req.headers.emplace_back(std::string(name), std::string(trim(std::string_view(h).substr(colon + 1))));
    }

    const auto te = req.header("Transfer-Encoding");
    if (te && !iequals(trim(*te), "identity")) {
        if (!iequals(trim(*te), "chunked")) throw HttpParseError("unsupported transfer encoding");
        for (;;) {
            const std::string size_line = read_line();
            const auto size_hex = trim(std::string_view(size_line).substr(0, size_line.find(';')));
            std::size_t size = 0;
            if (size_hex.empty()) throw HttpParseError("malformed chunk size");
            for (char c : size_hex) {
                if (!std::isxdigit(static_cast<unsigned char>(c))) throw HttpParseError("malformed chunk size");
                size = size * 16 + static_cast<std::size_t>(std::isdigit(static_cast<unsigned char>(c))
                                                                ? c - '0'
                                                                : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
                if (size > max_body_) throw HttpParseError("request body too large");
            }
            if (size == 0) {
                while (!read_line().empty()) {
                }
                break;
            }
            req.body += read_exact(size);
            if (req.body.size() > max_body_) throw HttpParseError("request body too large");
            if (!read_line().empty()) throw HttpParseError("malformed chunk terminator");
        }
    } else if (const auto cl = req.header("Content-Length")) {
        const auto v = trim(*cl);
        if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); }) ||
            v.size() > 12) {
            throw HttpParseError("malformed Content-Length");
        }
        const auto n = std::stoull(std::string(v));
        if (n > max_body_) throw HttpParseError("request body too large");
        req.body = read_exact(static_cast<std::size_t>(n));
    }
    return req;
}

}  // namespace jslight
