#include "jslight/bench.hpp"

#include <nlohmann/json.hpp>

#include "jslight/error.hpp"
#include "jslight/html_scan.hpp"
#include "jslight/http_wire.hpp"
#include "jslight/proxy.hpp"

namespace jslight {

namespace {

nlohmann::ordered_json run_json(const BenchRun& r) {
    nlohmann::ordered_json j;
    j["requests_total"] = r.requests_total;
    j["requests_blocked"] = r.requests_blocked;
    j["scripts_total"] = r.scripts_total;
    j["scripts_fetched"] = r.scripts_fetched;
    j["bytes_total"] = r.bytes_total;
    return j;
}

bool is_stub(const FetchResult& r) {
    for (const auto& [k, v] : r.headers) {
        if (iequals(k, kBlockedHeader)) return true;
    }
    return false;
}

}  // namespace

std::string bench_report_to_json(const BenchReport& r) {
    nlohmann::ordered_json j;
    j["page_url"] = r.page_url;
    j["requests_total"] = r.proxied.requests_total;
    j["requests_blocked"] = r.proxied.requests_blocked;
    j["scripts_fetched"] = r.proxied.scripts_fetched;
    j["bytes_total"] = r.direct.bytes_total;
    j["bytes_saved"] = r.bytes_saved;
    j["direct"] = run_json(r.direct);
    j["proxied"] = run_json(r.proxied);
    j["failures"] = r.failures;
    return j.dump();
}

BenchRun bench_run(const std::string& page_url, Fetcher& fetcher, std::vector<std::string>* failures) {
    BenchRun run;
    const auto page = fetcher.fetch(page_url, {{"Sec-Fetch-Dest", "document"}});
    ++run.requests_total;
    if (!page.ok()) {
        throw Error("cannot fetch " + page_url + ": " +
                    (page.error.empty() ? "HTTP " + std::to_string(page.status) : page.error));
    }
    run.bytes_total += page.body.size();
    const HeaderList script_headers = {{"Sec-Fetch-Dest", "script"}, {"Referer", page_url}};
    for (const auto& src : extract_script_urls(page.body, page_url)) {
        ++run.requests_total;
        ++run.scripts_total;
        const auto js = fetcher.fetch(src, script_headers);
        run.bytes_total += js.body.size();
        if (is_stub(js)) {
            ++run.requests_blocked;
        } else if (js.ok()) {
            ++run.scripts_fetched;
        } else if (failures) {
            failures->push_back(src + ": " + (js.error.empty() ? "HTTP " + std::to_string(js.status) : js.error));
        }
    }
    return run;
}

BenchReport bench(const std::string& page_url, Fetcher& direct, Fetcher& proxied) {
    BenchReport r;
    r.page_url = page_url;
    r.direct = bench_run(page_url, direct, &r.failures);
    r.proxied = bench_run(page_url, proxied, &r.failures);
    r.bytes_saved = static_cast<std::int64_t>(r.direct.bytes_total) - static_cast<std::int64_t>(r.proxied.bytes_total);
    return r;
}

BenchReport bench(const std::string& page_url, const std::pair<std::string, int>& proxy) {
    HttpFetcher direct;
    HttpFetchOptions opts;
    opts.proxy = proxy;
    HttpFetcher proxied(opts);
    return bench(page_url, direct, proxied);
}

}  // namespace jslight
