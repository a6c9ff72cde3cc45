#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jslight {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct FetchResult {
    int status = 0;
    std::string body;
    std::string content_type;
    HeaderList headers;
    std::string error;  // transport failure; empty when a response arrived

    bool ok() const { return error.empty() && status >= 200 && status < 300; }
};

class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResult fetch(const std::string& url, const HeaderList& headers) = 0;
    FetchResult fetch(const std::string& url) { return fetch(url, {}); }
};

struct HttpFetchOptions {
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{30};
    int retries = 1;  // extra attempts after a transport failure
    bool follow_redirects = true;
    bool verify_tls = true;
    // Send every request through this HTTP forward proxy.
    std::optional<std::pair<std::string, int>> proxy;
};

// http:// and https:// fetching over cpp-httplib.
class HttpFetcher : public Fetcher {
public:
    explicit HttpFetcher(HttpFetchOptions options = {}) : options_(std::move(options)) {}
    using Fetcher::fetch;
    FetchResult fetch(const std::string& url, const HeaderList& headers) override;

private:
    HttpFetchOptions options_;
};

}  // namespace jslight
