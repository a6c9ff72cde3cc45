#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "jslight/classify.hpp"
#include "jslight/entities.hpp"
#include "jslight/error.hpp"
#include "jslight/fetch.hpp"
#include "jslight/label_store.hpp"
#include "jslight/mlp.hpp"
#include "jslight/vocabulary.hpp"

namespace jslight {

struct RefreshReport {
    std::size_t pages = 0;
    std::size_t scripts_seen = 0;
    std::size_t newly_labeled = 0;
    std::size_t unchanged = 0;
    std::vector<std::string> failures;  // "<url>: <reason>"
};

std::string refresh_report_to_json(const RefreshReport& r);

// Failure with the HTTP status the service answers it with.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& message) : Error(message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

struct ServiceOptions {
    // Gate threshold; the model's threshold_default when unset.
    std::optional<double> threshold;
    bool allow_miss_classification = true;
    // Unix seconds; defaults to the system clock.
    std::function<std::int64_t()> clock;
};

// Labels scripts with entity matches first and the model otherwise, and
// keeps the results in a LabelStore.
class LabelService {
public:
    // `entities` may be null. Throws jslight::Error when the model carries no
    // vocabulary or the threshold is outside [0, 1).
    LabelService(std::shared_ptr<LabelStore> store, ModelParameters model, std::shared_ptr<Fetcher> fetcher,
                 std::shared_ptr<const EntityRepository> entities = nullptr, ServiceOptions options = {});
    ~LabelService();

    LabelService(const LabelService&) = delete;
    LabelService& operator=(const LabelService&) = delete;

    // Crawls the pages and labels every script whose content changed since
    // the last refresh. Fetch failures are reported, never thrown. Calls are
    // serialized.
    RefreshReport refresh(const std::vector<std::string>& page_urls);

    // Stored label for `url` when present. Otherwise classifies `source`
    // (fetching `url` when absent), stores and returns the result. Throws
    // ServiceError: 403 when miss classification is disabled, 400 for a bad
    // URL, 502 when the fetch fails.
    ClassificationResult classify_remote(const std::string& url, const std::optional<std::string>& source);

    // Category for one script, without touching the store.
    ClassificationResult label_script(std::string_view url, std::string_view source) const;

    const std::string& model_version() const { return model_version_; }
    LabelStore& store() { return *store_; }

    // HTTP endpoints: GET /v1/labels, POST /v1/classify, GET /v1/health.
    // Port 0 picks an ephemeral port. Throws jslight::Error on bind failure.
    void start(const std::string& host, int port);
    // Runs refresh(pages()) now and then every `period` until stop().
    void start_periodic_refresh(std::function<std::vector<std::string>()> pages, std::chrono::seconds period);
    void stop();
    int port() const { return port_; }

private:
    struct Http;

    std::int64_t now() const;
    LabelEntry make_entry(const std::string& key, const ClassificationResult& r) const;

    std::shared_ptr<LabelStore> store_;
    ModelParameters model_;
    Vocabulary vocab_;
    std::shared_ptr<Fetcher> fetcher_;
    std::shared_ptr<const EntityRepository> entities_;
    ServiceOptions options_;
    double threshold_;
    std::string model_version_;

    std::mutex refresh_mu_;
    std::unordered_map<std::string, std::string> seen_hashes_;  // key -> content hash

    std::unique_ptr<Http> http_;
    int port_ = 0;

    std::mutex timer_mu_;
    std::condition_variable timer_cv_;
    bool stopping_ = false;
    std::thread refresher_;
};

// One URL per line; blank lines and '#' comments are ignored.
std::vector<std::string> parse_page_list(std::string_view text);
std::vector<std::string> load_page_list(const std::filesystem::path& path);

}  // namespace jslight
