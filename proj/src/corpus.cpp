#include "jslight/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "jslight/digest.hpp"
#include "jslight/error.hpp"
#include "jslight/fetch.hpp"
#include "jslight/html_scan.hpp"
#include "jslight/url.hpp"

namespace jslight {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs fn(i) for i in [0, n) over a few worker threads. Each index is
// written by exactly one worker, so results stay order-independent.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    if (n < 64 || workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
}

}  // namespace

std::string ScriptRecord::key() const { return url.empty() ? "hash:" + content_hash : url; }

ScriptRecord make_script_record(std::string url, std::string source, std::string page_url,
                                std::int64_t fetched_at) {
    if (!url.empty()) {
        auto parsed = parse_url(url);
        if (!parsed || !parsed->has_authority) throw Error("script URL is not absolute: " + url);
    }
    ScriptRecord r;
    r.content_hash = sha256_hex(source);
    r.url = std::move(url);
    r.source = std::move(source);
    r.page_url = std::move(page_url);
    r.fetched_at = fetched_at;
    return r;
}

void write_corpus_dir(const fs::path& dir, const std::vector<ScriptRecord>& records) {
    fs::create_directories(dir);
    std::ofstream index(dir / "index.jsonl", std::ios::binary | std::ios::trunc);
    if (!index) throw Error("cannot write " + (dir / "index.jsonl").string());
    std::unordered_set<std::string> written;
    for (const auto& r : records) {
        if (written.insert(r.content_hash).second) {
            std::ofstream js(dir / (r.content_hash + ".js"), std::ios::binary | std::ios::trunc);
            js << r.source;
            if (!js) throw Error("cannot write script " + r.content_hash);
        }
        nlohmann::json line;
        line["hash"] = r.content_hash;
        line["url"] = r.url.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.url);
        line["page_url"] = r.page_url;
        line["fetched_at"] = r.fetched_at;
        index << line.dump() << '\n';
    }
    if (!index) throw Error("write failed for corpus index");
}

std::vector<ScriptRecord> load_corpus_dir(const fs::path& dir) {
    std::ifstream index(dir / "index.jsonl", std::ios::binary);
    if (!index) throw Error("corpus directory has no index.jsonl: " + dir.string());
    std::unordered_map<std::string, std::string> sources;
    std::vector<ScriptRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(index, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("corpus index line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("hash") || !j["hash"].is_string()) {
            throw Error("corpus index line " + std::to_string(lineno) + " has no hash");
        }
        const auto hash = j["hash"].get<std::string>();
        auto it = sources.find(hash);
        if (it == sources.end()) {
            auto src = read_file(dir / (hash + ".js"));
            if (sha256_hex(src) != hash) throw Error("script file " + hash + ".js does not match its digest");
            it = sources.emplace(hash, std::move(src)).first;
        }
        const auto url = j.contains("url") && j["url"].is_string() ? j["url"].get<std::string>() : std::string{};
        const auto page = j.contains("page_url") && j["page_url"].is_string() ? j["page_url"].get<std::string>()
                                                                              : std::string{};
        const auto at = j.contains("fetched_at") && j["fetched_at"].is_number_integer()
                            ? j["fetched_at"].get<std::int64_t>()
                            : std::int64_t{0};
        out.push_back(make_script_record(url, it->second, page, at));
    }
    return out;
}

namespace {

std::string fetch_failure(const FetchResult& r) {
    return r.error.empty() ? "HTTP " + std::to_string(r.status) : r.error;
}

}  // namespace

CrawlResult crawl_pages(const std::vector<std::string>& page_urls, Fetcher& fetcher, std::int64_t now) {
    CrawlResult res;
    std::unordered_set<std::string> seen_urls;
    for (const auto& page : page_urls) {
        const auto html = fetcher.fetch(page);
        if (!html.ok()) {
            res.failures.push_back(page + ": " + fetch_failure(html));
            continue;
        }
        for (const auto& src : extract_script_urls(html.body, page)) {
            if (!seen_urls.insert(src).second) continue;
            const auto js = fetcher.fetch(src);
            if (!js.ok()) {
                res.failures.push_back(src + ": " + fetch_failure(js));
                continue;
            }
            res.scripts.push_back(make_script_record(src, js.body, page, now));
        }
        for (auto& body : extract_inline_scripts(html.body)) {
            res.scripts.push_back(make_script_record("", std::move(body), page, now));
        }
    }
    return res;
}

DatasetBuild build_dataset(const std::vector<ScriptRecord>& scripts, const EntityRepository& repo,
                           const Vocabulary& vocab) {
    struct Pick {
        const ScriptRecord* record = nullptr;
        std::optional<Category> category;
    };
    std::unordered_map<std::string, Pick> by_hash;
    std::vector<std::string> order;
    DatasetBuild out;

    for (const auto& r : scripts) {
        std::optional<Category> cat;
        if (!r.url.empty()) {
            if (auto m = match_entity(r.url, repo)) cat = m->category;
        }
        auto [it, inserted] = by_hash.try_emplace(r.content_hash, Pick{&r, cat});
        if (inserted) {
            order.push_back(r.content_hash);
            continue;
        }
        ++out.duplicates_dropped;
        if (!it->second.category && cat) it->second = Pick{&r, cat};
    }
    std::sort(order.begin(), order.end());

    std::vector<const Pick*> labeled;
    for (const auto& h : order) {
        const auto& p = by_hash.at(h);
        if (p.category) {
            labeled.push_back(&p);
        } else {
            out.unlabeled.push_back(*p.record);
        }
    }

    out.dataset.vocab_version = vocab.version();
    out.dataset.rows.resize(labeled.size());
    parallel_for(labeled.size(), [&](std::size_t i) {
        const auto& p = *labeled[i];
        out.dataset.rows[i] = LabeledRow{p.record->key(), extract_features(p.record->source, vocab), *p.category};
    });
    for (const auto& row : out.dataset.rows) ++out.per_category[row.label];
    return out;
}

std::vector<FeatureRow> unlabeled_rows(const std::vector<ScriptRecord>& records, const Vocabulary& vocab) {
    std::vector<FeatureRow> rows(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
        rows[i] = FeatureRow{records[i].key(), std::nullopt, extract_features(records[i].source, vocab)};
    });
    return rows;
}

}  // namespace jslight
