#include "jslight/label_service.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "jslight/corpus.hpp"
#include "jslight/digest.hpp"
#include "jslight/features.hpp"
#include "jslight/model_io.hpp"
#include "jslight/url.hpp"

namespace jslight {

std::string refresh_report_to_json(const RefreshReport& r) {
    nlohmann::ordered_json j;
    j["pages"] = r.pages;
    j["scripts_seen"] = r.scripts_seen;
    j["newly_labeled"] = r.newly_labeled;
    j["unchanged"] = r.unchanged;
    j["failures"] = r.failures;
    return j.dump();
}

namespace {

Vocabulary model_vocabulary(const ModelParameters& model) {
    if (model.vocabulary.empty()) throw Error("model has no embedded vocabulary");
    if (model.vocabulary.size() != model.n_features()) throw Error("model vocabulary size does not match its input");
    return Vocabulary(model.vocabulary, model.vocab_version);
}

nlohmann::json result_json(const ClassificationResult& r) {
    return {{"category", to_string(r.category)}, {"confidence", r.confidence}};
}

nlohmann::json error_json(const std::string& message) { return {{"error", message}}; }

}  // namespace

struct LabelService::Http {
    httplib::Server server;
    std::thread thread;
};

LabelService::LabelService(std::shared_ptr<LabelStore> store, ModelParameters model, std::shared_ptr<Fetcher> fetcher,
                           std::shared_ptr<const EntityRepository> entities, ServiceOptions options)
    : store_(std::move(store)),
      model_(std::move(model)),
      vocab_(model_vocabulary(model_)),
      fetcher_(std::move(fetcher)),
      entities_(std::move(entities)),
      options_(std::move(options)),
      threshold_(options_.threshold.value_or(model_.threshold_default)) {
    if (!store_) throw Error("label service needs a store");
    if (!(threshold_ >= 0.0 && threshold_ < 1.0)) throw Error("threshold must lie in [0, 1)");
    validate(model_);
    model_version_ = "sha256:" + sha256_hex(model_to_json(model_)).substr(0, 16);
}

LabelService::~LabelService() { stop(); }

std::int64_t LabelService::now() const {
    if (options_.clock) return options_.clock();
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

ClassificationResult LabelService::label_script(std::string_view url, std::string_view source) const {
    if (!url.empty() && entities_) {
        if (auto m = match_entity(url, *entities_)) {
            ClassificationResult r;
            r.category = m->category;
            r.confidence = 1.0;
            r.probs[index_of(m->category)] = 1.0;
            return r;
        }
    }
    return assign_category(model_, extract_features(source, vocab_), threshold_);
}

LabelEntry LabelService::make_entry(const std::string& key, const ClassificationResult& r) const {
    LabelEntry e;
    e.key = key;
    e.domain = key_domain(key);
    e.category = r.category;
    e.confidence = r.confidence;
    e.labeled_at = now();
    return e;
}

RefreshReport LabelService::refresh(const std::vector<std::string>& page_urls) {
    std::lock_guard lock(refresh_mu_);
    RefreshReport report;
    report.pages = page_urls.size();
    if (page_urls.empty()) return report;
    if (!fetcher_) throw Error("label service has no fetcher");

    auto crawl = crawl_pages(page_urls, *fetcher_, now());
    report.failures = std::move(crawl.failures);
    std::unordered_set<std::string> seen;
    for (const auto& rec : crawl.scripts) {
        const auto key = rec.key();
        if (!seen.insert(key).second) continue;
        ++report.scripts_seen;
        auto it = seen_hashes_.find(key);
        if (it != seen_hashes_.end() && it->second == rec.content_hash && store_->peek(key)) {
            ++report.unchanged;
            continue;
        }
        try {
            store_->put(make_entry(key, label_script(rec.url, rec.source)));
            seen_hashes_[key] = rec.content_hash;
            ++report.newly_labeled;
        } catch (const std::exception& e) {
            report.failures.push_back(key + ": " + e.what());
        }
    }
    spdlog::info("refresh: {} pages, {} scripts, {} newly labeled, {} failures", report.pages, report.scripts_seen,
                 report.newly_labeled, report.failures.size());
    return report;
}

ClassificationResult LabelService::classify_remote(const std::string& url, const std::optional<std::string>& source) {
    const auto parsed = parse_url(url);
    if (!parsed || parsed->host.empty()) throw ServiceError(400, "url must be absolute");
    if (auto hit = store_->peek(url)) {
        ClassificationResult r;
        r.category = hit->category;
        r.confidence = hit->confidence;
        if (is_assigned(hit->category)) r.probs[index_of(hit->category)] = hit->confidence;
        return r;
    }
    if (!options_.allow_miss_classification) throw ServiceError(403, "miss classification disabled");

    std::string body;
    if (source) {
        body = *source;
    } else {
        if (!fetcher_) throw ServiceError(502, "no fetcher configured");
        auto res = fetcher_->fetch(url);
        if (!res.ok()) {
            throw ServiceError(502, "fetch failed: " + (res.error.empty() ? "HTTP " + std::to_string(res.status)
                                                                          : res.error));
        }
        body = std::move(res.body);
    }
    auto result = label_script(url, body);
    store_->put(make_entry(url, result));
    return result;
}

void LabelService::start(const std::string& host, int port) {
    if (http_) throw Error("label service already started");
    http_ = std::make_unique<Http>();
    auto& srv = http_->server;

    srv.Get("/v1/labels", [this](const httplib::Request& req, httplib::Response& res) {
        std::int64_t since = 0;
        if (req.has_param("since")) {
            const auto v = req.get_param_value("since");
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), since);
            if (ec != std::errc() || p != v.data() + v.size()) {
                res.status = 400;
                res.set_content(error_json("since must be an integer").dump(), "application/json");
                return;
            }
        }
        std::string body;
        for (const auto& e : store_->snapshot_since(since)) {
            body += entry_to_jsonl(e);
            body += '\n';
        }
        res.set_content(body, "application/x-ndjson");
    });

    srv.Post("/v1/classify", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto j = nlohmann::json::parse(req.body, nullptr, false);
            if (j.is_discarded() || !j.is_object()) throw ServiceError(400, "body must be a JSON object");
            if (!j.contains("url") || !j["url"].is_string()) throw ServiceError(400, "url is required");
            std::optional<std::string> source;
            if (j.contains("source") && !j["source"].is_null()) {
                if (!j["source"].is_string()) throw ServiceError(400, "source must be a base64 string");
                try {
                    source = base64_decode(j["source"].get<std::string>());
                } catch (const std::exception&) {
                    throw ServiceError(400, "source is not valid base64");
                }
            }
            const auto r = classify_remote(j["url"].get<std::string>(), source);
            res.set_content(result_json(r).dump(), "application/json");
        } catch (const ServiceError& e) {
            res.status = e.status();
            res.set_content(error_json(e.what()).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(error_json(e.what()).dump(), "application/json");
        }
    });

    srv.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::ordered_json j;
        j["model_version"] = model_version_;
        j["vocab_version"] = model_.vocab_version;
        j["store_entries"] = store_->size();
        res.set_content(j.dump(), "application/json");
    });

    port_ = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) {
        http_.reset();
        throw Error("cannot bind label service to " + host + ":" + std::to_string(port));
    }
    http_->thread = std::thread([s = &srv] { s->listen_after_bind(); });
}

void LabelService::start_periodic_refresh(std::function<std::vector<std::string>()> pages,
                                          std::chrono::seconds period) {
    if (period.count() <= 0) throw Error("refresh period must be positive");
    if (refresher_.joinable()) throw Error("periodic refresh already running");
    {
        std::lock_guard lock(timer_mu_);
        stopping_ = false;
    }
    refresher_ = std::thread([this, pages = std::move(pages), period] {
        for (;;) {
            try {
                refresh(pages());
            } catch (const std::exception& e) {
                spdlog::error("refresh failed: {}", e.what());
            }
            std::unique_lock lock(timer_mu_);
            if (timer_cv_.wait_for(lock, period, [this] { return stopping_; })) return;
        }
    });
}

void LabelService::stop() {
    {
        std::lock_guard lock(timer_mu_);
        stopping_ = true;
    }
    timer_cv_.notify_all();
    if (refresher_.joinable()) refresher_.join();
    if (http_) {
        http_->server.stop();
        if (http_->thread.joinable()) http_->thread.join();
        http_.reset();
    }
}

std::vector<std::string> parse_page_list(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

std::vector<std::string> load_page_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read page list " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_page_list(ss.str());
}

}  // namespace jslight
