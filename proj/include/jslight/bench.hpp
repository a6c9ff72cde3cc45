#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jslight/fetch.hpp"

namespace jslight {

struct BenchRun {
    std::uint64_t requests_total = 0;  // page plus script requests
    std::uint64_t requests_blocked = 0;
    std::uint64_t scripts_total = 0;
    std::uint64_t scripts_fetched = 0;  // script responses that were not stubs
    std::uint64_t bytes_total = 0;      // response body bytes received
};

struct BenchReport {
    std::string page_url;
    BenchRun direct;
    BenchRun proxied;
    std::int64_t bytes_saved = 0;  // direct.bytes_total - proxied.bytes_total
    std::vector<std::string> failures;
};

std::string bench_report_to_json(const BenchReport& r);

// Fetches the page and every script it references, statically (no script
// execution). Script requests carry Sec-Fetch-Dest: script and the page as
// Referer. Throws jslight::Error when the page itself cannot be fetched.
BenchRun bench_run(const std::string& page_url, Fetcher& fetcher, std::vector<std::string>* failures = nullptr);

// One direct run and one run through `proxied`.
BenchReport bench(const std::string& page_url, Fetcher& direct, Fetcher& proxied);

// Same, with the proxied run going through the HTTP proxy at host:port.
BenchReport bench(const std::string& page_url, const std::pair<std::string, int>& proxy);

}  // namespace jslight
