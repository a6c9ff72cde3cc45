#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "jslight/dataset.hpp"
#include "jslight/entities.hpp"
#include "jslight/vocabulary.hpp"

namespace jslight {

class Fetcher;

// One JS element. External scripts carry an absolute URL; inline scripts
// have an empty url and are keyed by their content hash.
struct ScriptRecord {
    std::string url;
    std::string source;
    std::string page_url;
    std::string content_hash;  // sha256_hex(source)
    std::int64_t fetched_at = 0;

    // url, or "hash:<content_hash>" for inline scripts.
    std::string key() const;
};

// Builds a record and fills content_hash. Throws jslight::Error when a
// nonempty url is not absolute.
ScriptRecord make_script_record(std::string url, std::string source, std::string page_url,
                                std::int64_t fetched_at);

// Directory layout: <content_hash>.js per distinct source plus index.jsonl
// with one {"hash", "url", "page_url", "fetched_at"} object per record
// ("url" null for inline scripts).
void write_corpus_dir(const std::filesystem::path& dir, const std::vector<ScriptRecord>& records);

// Throws jslight::Error on a missing index, a missing script file, or a
// file whose digest does not match its name.
std::vector<ScriptRecord> load_corpus_dir(const std::filesystem::path& dir);

// Live-crawl mode: fetches each page, then its external scripts; inline
// scripts are recorded under their hash. Fetch failures are skipped and
// returned in `failures`.
struct CrawlResult {
    std::vector<ScriptRecord> scripts;
    std::vector<std::string> failures;
};
CrawlResult crawl_pages(const std::vector<std::string>& page_urls, Fetcher& fetcher, std::int64_t now);

struct DatasetBuild {
    LabeledDataset dataset;               // rows sorted by content_hash
    std::vector<ScriptRecord> unlabeled;  // sorted by content_hash
    std::map<Category, std::size_t> per_category;
    std::size_t duplicates_dropped = 0;
};

// Dedups by content hash (preferring a copy whose URL matches an entity),
// labels matchable records via their entity and extracts their features.
// Every distinct hash ends up in exactly one of dataset.rows / unlabeled.
DatasetBuild build_dataset(const std::vector<ScriptRecord>& scripts, const EntityRepository& repo,
                           const Vocabulary& vocab);

std::vector<FeatureRow> unlabeled_rows(const std::vector<ScriptRecord>& records, const Vocabulary& vocab);

}  // namespace jslight
