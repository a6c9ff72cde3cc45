#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "jslight/error.hpp"
#include "jslight/fetch.hpp"

namespace jslight {

// Byte stream over a socket or a TLS session.
class Stream {
public:
    virtual ~Stream() = default;
    // Bytes read, 0 on orderly EOF, negative on error or timeout.
    virtual long read_some(char* buf, std::size_t len) = 0;
    virtual bool write_all(std::string_view data) = 0;
};

// Plain socket stream; does not own the descriptor.
class SocketStream : public Stream {
public:
    explicit SocketStream(int fd) : fd_(fd) {}
    long read_some(char* buf, std::size_t len) override;
    bool write_all(std::string_view data) override;

private:
    int fd_;
};

class HttpParseError : public Error {
public:
    using Error::Error;
};

struct HttpRequest {
    std::string method;
    std::string target;
    std::string version;
    HeaderList headers;
    std::string body;

    std::optional<std::string> header(std::string_view name) const;
    bool keep_alive() const;
};

struct HttpResponse {
    int status = 200;
    std::string reason;
    HeaderList headers;
    std::string body;

    std::optional<std::string> header(std::string_view name) const;
    // Serializes as HTTP/1.1. Adds Content-Length from the body unless
    // `content_length` overrides it (HEAD responses keep the upstream value).
    std::string serialize(std::optional<std::size_t> content_length = std::nullopt) const;
};

std::string_view reason_phrase(int status);

bool iequals(std::string_view a, std::string_view b);

// True for Connection, Proxy-Connection, Keep-Alive, Transfer-Encoding and
// the other per-hop headers a proxy must not forward.
bool is_hop_by_hop(std::string_view name);

// Buffered HTTP/1.1 request reader. Supports Content-Length and chunked
// request bodies.
class RequestReader {
public:
    explicit RequestReader(Stream& stream, std::size_t max_header_bytes = 64 * 1024,
                           std::size_t max_body_bytes = 32 * 1024 * 1024)
        : stream_(stream), max_header_(max_header_bytes), max_body_(max_body_bytes) {}

    // nullopt on EOF before any byte of a new request. Throws HttpParseError
    // on malformed input or a connection dropped mid-request.
    std::optional<HttpRequest> next();

private:
    bool fill();
    std::string read_line();
    std::string read_exact(std::size_t n);

    Stream& stream_;
    std::string buf_;
    std::size_t max_header_;
    std::size_t max_body_;
};

}  // namespace jslight
