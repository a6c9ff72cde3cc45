#include "jslight/fetch.hpp"

#include <httplib.h>

#include "jslight/url.hpp"

namespace jslight {

FetchResult HttpFetcher::fetch(const std::string& url, const HeaderList& headers) {
    FetchResult out;
    const auto parsed = parse_url(url);
    if (!parsed || parsed->host.empty() || (parsed->scheme != "http" && parsed->scheme != "https")) {
        out.error = "unsupported URL";
        return out;
    }
    const std::string host_port =
        parsed->scheme + "://" + parsed->host + (parsed->port ? ":" + std::to_string(*parsed->port) : "");

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        httplib::Client cli(host_port);
        cli.set_connection_timeout(options_.connect_timeout);
        cli.set_read_timeout(options_.read_timeout);
        cli.set_write_timeout(options_.read_timeout);
        cli.set_follow_location(options_.follow_redirects);
        cli.enable_server_certificate_verification(options_.verify_tls);
        if (options_.proxy) cli.set_proxy(options_.proxy->first, options_.proxy->second);

        // Absolute-form targets are only needed for plain-HTTP proxying;
        // httplib takes care of that when a proxy is configured.
        auto res = cli.Get(parsed->request_target(), hdrs);
        if (!res) {
            out.error = httplib::to_string(res.error());
            continue;
        }
        out.error.clear();
        out.status = res->status;
        out.body = std::move(res->body);
        out.content_type = res->get_header_value("Content-Type");
        for (const auto& [k, v] : res->headers) out.headers.emplace_back(k, v);
        break;
    }
    return out;
}

}  // namespace jslight
